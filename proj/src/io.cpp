#include "sbir/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sbir {

namespace fs = std::filesystem;

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("corrupt file: truncated u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("corrupt file: truncated u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_magic(std::ostream& out, const char magic[4]) { out.write(magic, 4); }

void expect_magic(std::istream& in, const char magic[4], const char* what) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw std::runtime_error(std::string("corrupt file: bad magic for ") + what);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    return in;
}

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const char* what) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument(std::string(what) + ": unknown key '" + key + "'");
    }
}

template <typename T>
void maybe(const Json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

void write_embeddings(const fs::path& path, const std::vector<std::uint64_t>& ids,
                      const Eigen::MatrixXd& embeddings) {
    if (static_cast<Eigen::Index>(ids.size()) != embeddings.rows())
        throw std::invalid_argument("write_embeddings: id/row count mismatch");
    auto out = open_out(path);
    put_magic(out, "FGEM");
    put_u32(out, 1);  // format version
    put_u32(out, static_cast<std::uint32_t>(ids.size()));
    put_u32(out, static_cast<std::uint32_t>(embeddings.cols()));
    for (std::uint64_t id : ids) put_u64(out, id);
    for (Eigen::Index r = 0; r < embeddings.rows(); ++r)
        for (Eigen::Index c = 0; c < embeddings.cols(); ++c)
            put_f64(out, embeddings(r, c));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

EmbeddingFile read_embeddings(const fs::path& path) {
    auto in = open_in(path);
    expect_magic(in, "FGEM", "embedding file");
    const std::uint32_t version = get_u32(in);
    if (version != 1) throw std::runtime_error("unsupported embedding file version");
    const std::uint32_t count = get_u32(in);
    const std::uint32_t dim = get_u32(in);
    EmbeddingFile f;
    f.ids.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) f.ids.push_back(get_u64(in));
    f.embeddings.resize(count, dim);
    for (std::uint32_t r = 0; r < count; ++r)
        for (std::uint32_t c = 0; c < dim; ++c) f.embeddings(r, c) = get_f64(in);
    return f;
}

namespace {

void put_section_name(std::ostream& out, const std::string& name) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
}

void put_array_section(std::ostream& out, const std::string& name, const Array& a) {
    put_section_name(out, name);
    out.put(0);  // kind: f64 array
    put_u64(out, static_cast<std::uint64_t>(a.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) put_f64(out, a(i));
}

void put_bytes_section(std::ostream& out, const std::string& name,
                       const std::string& bytes) {
    put_section_name(out, name);
    out.put(1);  // kind: raw bytes
    put_u64(out, bytes.size());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct Section {
    int kind;
    Array array;
    std::string bytes;
};

std::unordered_map<std::string, Section> read_sections(std::istream& in,
                                                       std::uint32_t count) {
    std::unordered_map<std::string, Section> sections;
    for (std::uint32_t s = 0; s < count; ++s) {
        const std::uint32_t len = get_u32(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        const int kind = in.get();
        if (!in) throw std::runtime_error("corrupt file: truncated section");
        Section sec;
        sec.kind = kind;
        const std::uint64_t n = get_u64(in);
        if (kind == 0) {
            sec.array.resize(static_cast<Eigen::Index>(n));
            for (std::uint64_t i = 0; i < n; ++i)
                sec.array(static_cast<Eigen::Index>(i)) = get_f64(in);
        } else if (kind == 1) {
            sec.bytes.resize(n);
            in.read(sec.bytes.data(), static_cast<std::streamsize>(n));
        } else {
            throw std::runtime_error("corrupt file: unknown section kind");
        }
        sections.emplace(std::move(name), std::move(sec));
    }
    return sections;
}

Json adam_meta(const AdamState& s) {
    return Json{{"beta1", s.beta1}, {"beta2", s.beta2}, {"eps", s.eps}, {"step", s.step}};
}

AdamState adam_from_meta(const Json& j, const std::vector<Tensor>& params) {
    AdamState s = AdamState::for_params(params, j.at("beta1").get<double>(),
                                        j.at("beta2").get<double>(),
                                        j.at("eps").get<double>());
    s.step = j.at("step").get<std::int64_t>();
    return s;
}

}  // namespace

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
    Json meta;
    meta["version"] = 1;
    meta["epoch"] = ckpt.epoch;
    meta["photo_config"] = to_json(ckpt.photo_config);
    meta["sketch_config"] = to_json(ckpt.sketch_config);
    meta["photo_adam"] = adam_meta(ckpt.photo_adam);
    meta["sketch_adam"] = adam_meta(ckpt.sketch_adam);
    meta["loss_history"] = ckpt.loss_history;

    std::uint32_t count = 1;
    count += static_cast<std::uint32_t>(3 * ckpt.photo_params.size());
    count += static_cast<std::uint32_t>(3 * ckpt.sketch_params.size());

    auto out = open_out(path);
    put_magic(out, "FGCP");
    put_u32(out, 1);
    put_u32(out, count);
    put_bytes_section(out, "meta", meta.dump());
    auto dump_side = [&out](const char* prefix, const NamedParams& params,
                            const AdamState& adam) {
        const auto& items = params.items();
        for (size_t i = 0; i < items.size(); ++i) {
            put_array_section(out, std::string(prefix) + ".p." + items[i].first,
                              items[i].second.values());
            put_array_section(out, std::string(prefix) + ".m." + items[i].first, adam.m[i]);
            put_array_section(out, std::string(prefix) + ".v." + items[i].first, adam.v[i]);
        }
    };
    dump_side("photo", ckpt.photo_params, ckpt.photo_adam);
    dump_side("sketch", ckpt.sketch_params, ckpt.sketch_adam);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint read_checkpoint(const fs::path& path) {
    auto in = open_in(path);
    expect_magic(in, "FGCP", "checkpoint");
    const std::uint32_t version = get_u32(in);
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    const std::uint32_t count = get_u32(in);
    auto sections = read_sections(in, count);
    const Json meta = Json::parse(sections.at("meta").bytes);

    Checkpoint ckpt;
    ckpt.photo_config = encoder_config_from_json(meta.at("photo_config"));
    ckpt.sketch_config = encoder_config_from_json(meta.at("sketch_config"));
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.loss_history = meta.at("loss_history").get<std::vector<double>>();
    // Rebuild the parameter skeletons from the configs, then overwrite the
    // values; this pins shapes and ordering.
    ckpt.photo_params = init_params(ckpt.photo_config, 0);
    ckpt.sketch_params = init_params(ckpt.sketch_config, 0);
    auto photo_tensors = ckpt.photo_params.tensors();
    auto sketch_tensors = ckpt.sketch_params.tensors();
    ckpt.photo_adam = adam_from_meta(meta.at("photo_adam"), photo_tensors);
    ckpt.sketch_adam = adam_from_meta(meta.at("sketch_adam"), sketch_tensors);

    auto load_side = [&sections](const char* prefix, NamedParams& params,
                                 AdamState& adam) {
        const auto& items = params.items();
        auto handles = params.tensors();  // share nodes with `params`
        for (size_t i = 0; i < items.size(); ++i) {
            auto fetch = [&](const std::string& name) -> const Array& {
                auto it = sections.find(name);
                if (it == sections.end() || it->second.kind != 0)
                    throw std::runtime_error("corrupt checkpoint: missing section " + name);
                return it->second.array;
            };
            const Array& p = fetch(std::string(prefix) + ".p." + items[i].first);
            if (p.size() != handles[i].numel())
                throw std::runtime_error("corrupt checkpoint: size mismatch in " +
                                         items[i].first);
            handles[i].mutable_values() = p;
            adam.m[i] = fetch(std::string(prefix) + ".m." + items[i].first);
            adam.v[i] = fetch(std::string(prefix) + ".v." + items[i].first);
        }
    };
    load_side("photo", ckpt.photo_params, ckpt.photo_adam);
    load_side("sketch", ckpt.sketch_params, ckpt.sketch_adam);
    return ckpt;
}

void write_pgm(const fs::path& path, const Raster& raster) {
    auto out = open_out(path);
    out << "P5\n" << raster.w << " " << raster.h << "\n65535\n";
    for (double p : raster.pixels) {
        const int v = static_cast<int>(std::lround(std::clamp(p, 0.0, 1.0) * 65535.0));
        out.put(static_cast<char>((v >> 8) & 0xff));
        out.put(static_cast<char>(v & 0xff));
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Raster read_pgm(const fs::path& path) {
    auto in = open_in(path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("corrupt PGM (expected P5): " + path.string());
    int w, h, maxval;
    in >> w >> h >> maxval;
    if (!in || w <= 0 || h <= 0 || maxval != 65535)
        throw std::runtime_error("corrupt PGM header: " + path.string());
    in.get();  // single whitespace after maxval
    Raster r = Raster::filled(h, w);
    for (double& p : r.pixels) {
        const int hi = in.get(), lo = in.get();
        if (hi < 0 || lo < 0) throw std::runtime_error("corrupt PGM data: " + path.string());
        p = static_cast<double>((hi << 8) | lo) / 65535.0;
    }
    return r;
}

void write_dataset(const fs::path& dir, const DatasetIndex& ds) {
    fs::create_directories(dir / "photos");
    fs::create_directories(dir / "sketches");
    std::ostringstream manifest;
    Json header;
    header["format"] = "sbir-manifest";
    header["version"] = 1;
    header["num_categories"] = ds.num_categories;
    header["split"] = ds.split_tag;
    manifest << header.dump() << "\n";
    for (const SampleRecord& s : ds.items) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%06llu",
                      static_cast<unsigned long long>(s.instance_id));
        const std::string photo_rel = std::string("photos/") + buf + ".pgm";
        write_pgm(dir / photo_rel, s.photo);
        Json rec;
        rec["instance_id"] = s.instance_id;
        rec["category_id"] = s.category_id;
        rec["photo_path"] = photo_rel;
        Json sketch_paths = Json::array();
        for (size_t k = 0; k < s.sketches.size(); ++k) {
            const std::string rel =
                std::string("sketches/") + buf + "_" + std::to_string(k) + ".pgm";
            write_pgm(dir / rel, s.sketches[k]);
            sketch_paths.push_back(rel);
        }
        rec["sketch_paths"] = std::move(sketch_paths);
        if (s.mirror_sibling_id)
            rec["mirror_sibling_id"] = *s.mirror_sibling_id;
        else
            rec["mirror_sibling_id"] = nullptr;
        manifest << rec.dump() << "\n";
    }
    write_text_file(dir / "manifest.jsonl", manifest.str());
}

DatasetIndex read_dataset(const fs::path& manifest_path) {
    const fs::path dir =
        fs::is_directory(manifest_path) ? manifest_path : manifest_path.parent_path();
    const fs::path file =
        fs::is_directory(manifest_path) ? manifest_path / "manifest.jsonl" : manifest_path;
    std::istringstream in(read_text_file(file));
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty manifest: " + file.string());
    const Json header = Json::parse(line);
    if (header.at("format") != "sbir-manifest" || header.at("version") != 1)
        throw std::runtime_error("unsupported manifest format: " + file.string());
    DatasetIndex ds;
    ds.num_categories = header.at("num_categories").get<int>();
    ds.split_tag = header.at("split").get<std::string>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const Json rec = Json::parse(line);
        SampleRecord s;
        s.instance_id = rec.at("instance_id").get<std::uint64_t>();
        s.category_id = rec.at("category_id").get<int>();
        s.photo = read_pgm(dir / rec.at("photo_path").get<std::string>());
        for (const auto& sp : rec.at("sketch_paths"))
            s.sketches.push_back(read_pgm(dir / sp.get<std::string>()));
        if (!rec.at("mirror_sibling_id").is_null())
            s.mirror_sibling_id = rec.at("mirror_sibling_id").get<std::uint64_t>();
        ds.items.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

Json report_to_json(const RetrievalReport& report, const Json& provenance) {
    Json j;
    j["format"] = "sbir-report";
    j["version"] = 1;
    j["provenance"] = provenance;
    j["num_queries"] = report.num_queries;
    Json recall;
    for (const auto& [k, v] : report.recall_at) recall[std::to_string(k)] = v;
    j["recall"] = std::move(recall);
    if (report.flip_confusion_rate)
        j["flip_confusion_rate"] = *report.flip_confusion_rate;
    else
        j["flip_confusion_rate"] = nullptr;
    j["flip_confusion_count"] = report.flip_confusion_count;
    j["category_mismatch_rate"] = report.category_mismatch_rate;
    j["category_mismatch_count"] = report.category_mismatch_count;
    Json per_query = Json::array();
    for (const RetrievalResult& r : report.per_query) {
        Json q;
        q["query_id"] = r.query_id;
        q["ground_truth_id"] = r.ground_truth_id;
        q["query_category"] = r.query_category;
        Json ranked = Json::array();
        for (size_t i = 0; i < r.ranked.size(); ++i)
            ranked.push_back(Json{{"id", r.ranked[i].photo_id},
                                  {"distance", r.ranked[i].distance},
                                  {"category", r.ranked_categories[i]}});
        q["ranked"] = std::move(ranked);
        per_query.push_back(std::move(q));
    }
    j["per_query"] = std::move(per_query);
    return j;
}

RetrievalReport report_from_json(const Json& j) {
    if (j.at("format") != "sbir-report" || j.at("version") != 1)
        throw std::invalid_argument("unsupported report format");
    RetrievalReport r;
    r.num_queries = j.at("num_queries").get<int>();
    for (const auto& [k, v] : j.at("recall").items())
        r.recall_at[std::stoi(k)] = v.get<double>();
    if (!j.at("flip_confusion_rate").is_null())
        r.flip_confusion_rate = j.at("flip_confusion_rate").get<double>();
    r.flip_confusion_count = j.at("flip_confusion_count").get<int>();
    r.category_mismatch_rate = j.at("category_mismatch_rate").get<double>();
    r.category_mismatch_count = j.at("category_mismatch_count").get<int>();
    for (const auto& q : j.at("per_query")) {
        RetrievalResult res;
        res.query_id = q.at("query_id").get<std::uint64_t>();
        res.ground_truth_id = q.at("ground_truth_id").get<std::uint64_t>();
        res.query_category = q.at("query_category").get<int>();
        for (const auto& h : q.at("ranked")) {
            res.ranked.push_back(
                {h.at("id").get<std::uint64_t>(), h.at("distance").get<double>()});
            res.ranked_categories.push_back(h.at("category").get<int>());
        }
        r.per_query.push_back(std::move(res));
    }
    return r;
}

Json to_json(const SynthSpec& s) {
    Json j;
    j["num_categories"] = s.num_categories;
    j["instances_per_category"] = s.instances_per_category;
    j["sketches_per_instance"] = s.sketches_per_instance;
    j["image_h"] = s.image_h;
    j["image_w"] = s.image_w;
    j["mirror_fraction"] = s.mirror_fraction;
    j["stroke_jitter"] = s.stroke_jitter;
    j["background_noise"] = s.background_noise;
    j["seed"] = s.seed;
    return j;
}

SynthSpec synth_spec_from_json(const Json& j) {
    reject_unknown_keys(j,
                        {"num_categories", "instances_per_category",
                         "sketches_per_instance", "image_h", "image_w",
                         "mirror_fraction", "stroke_jitter", "background_noise", "seed"},
                        "synth config");
    SynthSpec s;
    maybe(j, "num_categories", s.num_categories);
    maybe(j, "instances_per_category", s.instances_per_category);
    maybe(j, "sketches_per_instance", s.sketches_per_instance);
    maybe(j, "image_h", s.image_h);
    maybe(j, "image_w", s.image_w);
    maybe(j, "mirror_fraction", s.mirror_fraction);
    maybe(j, "stroke_jitter", s.stroke_jitter);
    maybe(j, "background_noise", s.background_noise);
    maybe(j, "seed", s.seed);
    s.validate();
    return s;
}

std::string strategy_name(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::Baseline: return "baseline";
        case SamplingStrategy::Flip: return "flip";
        case SamplingStrategy::Category: return "category";
        case SamplingStrategy::FlipCategory: return "flip_category";
    }
    throw std::logic_error("unknown strategy");
}

SamplingStrategy strategy_from_name(const std::string& name) {
    if (name == "baseline") return SamplingStrategy::Baseline;
    if (name == "flip") return SamplingStrategy::Flip;
    if (name == "category") return SamplingStrategy::Category;
    if (name == "flip_category") return SamplingStrategy::FlipCategory;
    throw std::invalid_argument("unknown sampling strategy: " + name);
}

Json to_json(const BatchSpec& s) {
    Json j;
    j["batch_size"] = s.batch_size;
    j["strategy"] = strategy_name(s.strategy);
    j["flip_duplicate_fraction"] = s.flip_duplicate_fraction;
    j["category_repeat_min"] = s.category_repeat_min;
    j["category_repeat_max"] = s.category_repeat_max;
    j["seed"] = s.seed;
    return j;
}

BatchSpec batch_spec_from_json(const Json& j) {
    reject_unknown_keys(j,
                        {"batch_size", "strategy", "flip_duplicate_fraction",
                         "category_repeat_min", "category_repeat_max", "seed"},
                        "batch config");
    BatchSpec s;
    maybe(j, "batch_size", s.batch_size);
    if (j.contains("strategy")) s.strategy = strategy_from_name(j.at("strategy"));
    maybe(j, "flip_duplicate_fraction", s.flip_duplicate_fraction);
    maybe(j, "category_repeat_min", s.category_repeat_min);
    maybe(j, "category_repeat_max", s.category_repeat_max);
    maybe(j, "seed", s.seed);
    s.validate();
    return s;
}

Json to_json(const LossConfig& s) {
    return Json{{"margin", s.margin}, {"classification_weight", s.classification_weight}};
}

LossConfig loss_config_from_json(const Json& j) {
    reject_unknown_keys(j, {"margin", "classification_weight"}, "loss config");
    LossConfig s;
    maybe(j, "margin", s.margin);
    maybe(j, "classification_weight", s.classification_weight);
    s.validate();
    return s;
}

Json to_json(const TrainSchedule& s) {
    Json j;
    j["epochs"] = s.epochs;
    j["initial_lr"] = s.initial_lr;
    j["drop_epoch"] = s.drop_epoch;
    j["dropped_lr"] = s.dropped_lr;
    j["finetune_lr"] = s.finetune_lr;
    j["batch_size"] = s.batch_size;
    j["seed"] = s.seed;
    return j;
}

TrainSchedule train_schedule_from_json(const Json& j) {
    reject_unknown_keys(j,
                        {"epochs", "initial_lr", "drop_epoch", "dropped_lr",
                         "finetune_lr", "batch_size", "seed"},
                        "schedule config");
    TrainSchedule s;
    maybe(j, "epochs", s.epochs);
    maybe(j, "initial_lr", s.initial_lr);
    maybe(j, "drop_epoch", s.drop_epoch);
    maybe(j, "dropped_lr", s.dropped_lr);
    maybe(j, "finetune_lr", s.finetune_lr);
    maybe(j, "batch_size", s.batch_size);
    maybe(j, "seed", s.seed);
    return s;
}

Json to_json(const EncoderConfig& c) {
    return std::visit(
        [](const auto& cfg) -> Json {
            using T = std::decay_t<decltype(cfg)>;
            Json j;
            if constexpr (std::is_same_v<T, CnnEncoderConfig>) {
                j["type"] = "cnn";
                j["stage_channels"] = cfg.stage_channels;
                j["blocks_per_stage"] = cfg.blocks_per_stage;
                j["input_channels"] = cfg.input_channels;
                j["input_h"] = cfg.input_h;
                j["input_w"] = cfg.input_w;
                j["num_classes"] = cfg.num_classes;
                j["embedding_pool"] = cfg.embedding_pool == EmbeddingPool::Spatial2x2
                                          ? "spatial2x2"
                                          : "global1x1";
            } else {
                j["type"] = "vit";
                j["patch_size"] = cfg.patch_size;
                j["model_dim"] = cfg.model_dim;
                j["num_heads"] = cfg.num_heads;
                j["depth"] = cfg.depth;
                j["input_channels"] = cfg.input_channels;
                j["input_h"] = cfg.input_h;
                j["input_w"] = cfg.input_w;
                j["num_classes"] = cfg.num_classes;
            }
            return j;
        },
        c);
}

EncoderConfig encoder_config_from_json(const Json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "cnn") {
        reject_unknown_keys(j,
                            {"type", "stage_channels", "blocks_per_stage",
                             "input_channels", "input_h", "input_w", "num_classes",
                             "embedding_pool"},
                            "cnn encoder config");
        CnnEncoderConfig c;
        maybe(j, "stage_channels", c.stage_channels);
        maybe(j, "blocks_per_stage", c.blocks_per_stage);
        maybe(j, "input_channels", c.input_channels);
        maybe(j, "input_h", c.input_h);
        maybe(j, "input_w", c.input_w);
        maybe(j, "num_classes", c.num_classes);
        if (j.contains("embedding_pool")) {
            const std::string p = j.at("embedding_pool").get<std::string>();
            if (p == "spatial2x2")
                c.embedding_pool = EmbeddingPool::Spatial2x2;
            else if (p == "global1x1")
                c.embedding_pool = EmbeddingPool::Global1x1;
            else
                throw std::invalid_argument("unknown embedding_pool: " + p);
        }
        c.validate();
        return c;
    }
    if (type == "vit") {
        reject_unknown_keys(j,
                            {"type", "patch_size", "model_dim", "num_heads", "depth",
                             "input_channels", "input_h", "input_w", "num_classes"},
                            "vit encoder config");
        VitEncoderConfig c;
        maybe(j, "patch_size", c.patch_size);
        maybe(j, "model_dim", c.model_dim);
        maybe(j, "num_heads", c.num_heads);
        maybe(j, "depth", c.depth);
        maybe(j, "input_channels", c.input_channels);
        maybe(j, "input_h", c.input_h);
        maybe(j, "input_w", c.input_w);
        maybe(j, "num_classes", c.num_classes);
        c.validate();
        return c;
    }
    throw std::invalid_argument("unknown encoder type: " + type);
}

void write_text_file(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const fs::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace sbir
