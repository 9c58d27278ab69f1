// Command-line front end: generate -> train -> finetune -> embed -> eval
// -> compare, with a JSON config document plus flag overrides.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "sbir/io.hpp"
#include "sbir/pipeline.hpp"
#include "sbir/synth.hpp"

namespace fs = std::filesystem;
using sbir::Json;

namespace {

struct RunConfig {
    sbir::SynthSpec synth;
    sbir::BatchSpec batch;
    sbir::LossConfig loss;
    sbir::TrainSchedule schedule;
    sbir::EncoderConfig photo_encoder = sbir::CnnEncoderConfig{};
    sbir::EncoderConfig sketch_encoder = sbir::CnnEncoderConfig{};
};

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    const Json j = Json::parse(sbir::read_text_file(path));
    for (const auto& [key, value] : j.items()) {
        if (key == "synth")
            cfg.synth = sbir::synth_spec_from_json(value);
        else if (key == "batch")
            cfg.batch = sbir::batch_spec_from_json(value);
        else if (key == "loss")
            cfg.loss = sbir::loss_config_from_json(value);
        else if (key == "schedule")
            cfg.schedule = sbir::train_schedule_from_json(value);
        else if (key == "photo_encoder")
            cfg.photo_encoder = sbir::encoder_config_from_json(value);
        else if (key == "sketch_encoder")
            cfg.sketch_encoder = sbir::encoder_config_from_json(value);
        else
            throw std::invalid_argument("config: unknown section '" + key + "'");
    }
    return cfg;
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.synth.seed = seed;
    cfg.batch.seed = seed;
    cfg.schedule.seed = seed;
}

Json dataset_provenance(const std::string& dataset_path) {
    return Json{{"dataset", dataset_path}};
}

int cmd_generate(const RunConfig& cfg, const std::string& out_dir) {
    sbir::DatasetIndex ds = sbir::generate_dataset(cfg.synth);
    sbir::write_dataset(out_dir, ds);
    auto [train_ds, test_ds] = sbir::split_dataset(ds, 0.1, cfg.synth.seed);
    sbir::write_dataset(fs::path(out_dir) / "train", train_ds);
    sbir::write_dataset(fs::path(out_dir) / "test", test_ds);
    std::cout << "generated " << ds.items.size() << " instances ("
              << train_ds.items.size() << " train / " << test_ds.items.size()
              << " test) under " << out_dir << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& dataset_path,
              const std::string& out_ckpt, const std::string& out_history) {
    sbir::DatasetIndex ds = sbir::read_dataset(dataset_path);
    sbir::Checkpoint ckpt = sbir::train(ds, cfg.photo_encoder, cfg.sketch_encoder,
                                        cfg.batch, cfg.loss, cfg.schedule);
    sbir::write_checkpoint(out_ckpt, ckpt);
    if (!out_history.empty()) {
        Json h;
        h["format"] = "sbir-history";
        h["version"] = 1;
        h["epochs"] = ckpt.epoch;
        h["loss_history"] = ckpt.loss_history;
        sbir::write_text_file(out_history, h.dump(2) + "\n");
    }
    std::cout << "trained " << ckpt.epoch << " epochs; final loss "
              << ckpt.loss_history.back() << "; wrote " << out_ckpt << "\n";
    return 0;
}

int cmd_finetune(const RunConfig& cfg, const std::string& in_ckpt,
                 const std::string& strategy, const std::string& dataset_path,
                 const std::string& out_ckpt) {
    sbir::DatasetIndex ds = sbir::read_dataset(dataset_path);
    sbir::Checkpoint ckpt = sbir::read_checkpoint(in_ckpt);
    sbir::BatchSpec spec = cfg.batch;
    if (!strategy.empty()) spec.strategy = sbir::strategy_from_name(strategy);
    ckpt = sbir::finetune(std::move(ckpt), ds, spec, cfg.loss, cfg.schedule);
    sbir::write_checkpoint(out_ckpt, ckpt);
    std::cout << "finetuned to epoch " << ckpt.epoch << " with strategy "
              << sbir::strategy_name(spec.strategy) << "; wrote " << out_ckpt << "\n";
    return 0;
}

int cmd_embed(const std::string& in_ckpt, const std::string& dataset_path,
              const std::string& out_prefix) {
    sbir::DatasetIndex ds = sbir::read_dataset(dataset_path);
    sbir::Checkpoint ckpt = sbir::read_checkpoint(in_ckpt);
    sbir::DatasetEmbeddings embs = sbir::embed_dataset(ckpt, ds);
    const std::string photo_file = out_prefix + ".photos.fgem";
    const std::string sketch_file = out_prefix + ".sketches.fgem";
    sbir::write_embeddings(photo_file, embs.photo_ids, embs.photo_embeddings);
    sbir::write_embeddings(sketch_file, embs.sketch_ids, embs.sketch_embeddings);
    std::cout << "wrote " << photo_file << " (" << embs.photo_ids.size()
              << " photos) and " << sketch_file << " (" << embs.sketch_ids.size()
              << " sketches)\n";
    return 0;
}

int cmd_eval(const std::string& embed_prefix, const std::string& dataset_path,
             const std::vector<int>& ks, const std::string& out_report) {
    sbir::DatasetIndex ds = sbir::read_dataset(dataset_path);
    sbir::EmbeddingFile photos = sbir::read_embeddings(embed_prefix + ".photos.fgem");
    sbir::EmbeddingFile sketches = sbir::read_embeddings(embed_prefix + ".sketches.fgem");

    sbir::EmbeddingIndex index;
    index.ids = photos.ids;
    index.embeddings = photos.embeddings;
    for (std::uint64_t id : photos.ids) {
        const sbir::SampleRecord& rec = ds.by_instance(id);
        index.categories.push_back(rec.category_id);
        if (rec.mirror_sibling_id) index.mirror_map[id] = *rec.mirror_sibling_id;
    }
    // Drop mirror entries whose counterpart is not in this index.
    for (auto it = index.mirror_map.begin(); it != index.mirror_map.end();)
        it = index.mirror_map.count(it->second) ? std::next(it)
                                                : index.mirror_map.erase(it);
    std::vector<std::uint64_t> gt;
    std::vector<int> cats;
    for (std::uint64_t qid : sketches.ids) {
        gt.push_back(sbir::instance_of_query(qid));
        cats.push_back(ds.by_instance(gt.back()).category_id);
    }
    sbir::RetrievalReport report =
        sbir::evaluate(index, sketches.ids, sketches.embeddings, gt, cats, ks);
    Json provenance = dataset_provenance(dataset_path);
    provenance["embeddings"] = embed_prefix;
    const Json j = sbir::report_to_json(report, provenance);
    sbir::write_text_file(out_report, j.dump(2) + "\n");
    std::cout << "wrote " << out_report << "\n";
    for (const auto& [k, v] : report.recall_at)
        std::cout << "recall@" << k << " = " << v << "\n";
    if (report.flip_confusion_rate)
        std::cout << "flip_confusion_rate = " << *report.flip_confusion_rate << "\n";
    else
        std::cout << "flip_confusion_rate = unavailable (no mirror map)\n";
    std::cout << "category_mismatch_rate = " << report.category_mismatch_rate << "\n";
    return 0;
}

int cmd_compare(const std::string& report_a, const std::string& report_b,
                const std::string& out_file) {
    const Json ja = Json::parse(sbir::read_text_file(report_a));
    const Json jb = Json::parse(sbir::read_text_file(report_b));
    sbir::RetrievalReport a = sbir::report_from_json(ja);
    sbir::RetrievalReport b = sbir::report_from_json(jb);
    Json out;
    out["format"] = "sbir-comparison";
    out["version"] = 1;
    out["baseline"] = report_a;
    out["candidate"] = report_b;
    Json deltas;
    for (const auto& [k, v] : a.recall_at)
        if (b.recall_at.count(k))
            deltas["recall@" + std::to_string(k)] = b.recall_at.at(k) - v;
    out["recall_delta"] = std::move(deltas);
    if (a.category_mismatch_count > 0)
        out["category_mismatch_improvement_pct"] = sbir::improvement_percentage(
            a.category_mismatch_count, b.category_mismatch_count);
    else
        out["category_mismatch_improvement_pct"] = nullptr;
    if (a.flip_confusion_rate && b.flip_confusion_rate && a.flip_confusion_count > 0)
        out["flip_confusion_improvement_pct"] = sbir::improvement_percentage(
            a.flip_confusion_count, b.flip_confusion_count);
    else
        out["flip_confusion_improvement_pct"] = nullptr;
    sbir::write_text_file(out_file, out.dump(2) + "\n");
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fine-grained sketch-to-photo retrieval lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "JSON config document");
    app.add_option("--seed", seed, "Override every seed in the config")
        ->each([&seed_set](const std::string&) { seed_set = true; });

    std::string out_dir = "dataset";
    auto* generate = app.add_subcommand("generate", "Generate the synthetic dataset");
    generate->add_option("--out", out_dir, "Output directory")->capture_default_str();

    std::string dataset_path = "dataset/train";
    std::string ckpt_path = "model.fgcp";
    std::string history_path;
    auto* train = app.add_subcommand("train", "Train photo+sketch encoders");
    train->add_option("--dataset", dataset_path, "Dataset directory or manifest");
    train->add_option("--out", ckpt_path, "Output checkpoint")->capture_default_str();
    train->add_option("--history", history_path, "Metric history document");

    std::string in_ckpt = "model.fgcp";
    std::string strategy;
    std::string out_ckpt = "finetuned.fgcp";
    auto* finetune = app.add_subcommand("finetune", "Continue training a checkpoint");
    finetune->add_option("--ckpt", in_ckpt, "Input checkpoint");
    finetune->add_option("--strategy", strategy,
                         "baseline | flip | category | flip_category");
    finetune->add_option("--dataset", dataset_path, "Dataset directory or manifest");
    finetune->add_option("--out", out_ckpt, "Output checkpoint")->capture_default_str();

    std::string embed_prefix = "embeddings";
    auto* embed = app.add_subcommand("embed", "Embed a dataset split");
    embed->add_option("--ckpt", in_ckpt, "Checkpoint");
    embed->add_option("--dataset", dataset_path, "Dataset directory or manifest");
    embed->add_option("--out", embed_prefix, "Output prefix (.photos/.sketches.fgem)")
        ->capture_default_str();

    std::vector<int> ks{1, 2};
    std::string report_path = "report.json";
    auto* eval = app.add_subcommand("eval", "Evaluate retrieval from embeddings");
    eval->add_option("--embeddings", embed_prefix, "Embedding file prefix");
    eval->add_option("--dataset", dataset_path, "Dataset directory or manifest");
    eval->add_option("--k", ks, "recall@k values")->capture_default_str();
    eval->add_option("--out", report_path, "Report document")->capture_default_str();

    std::string report_a, report_b, compare_out = "comparison.json";
    auto* compare = app.add_subcommand("compare", "Compare two eval reports");
    compare->add_option("--baseline", report_a, "Baseline report")->required();
    compare->add_option("--candidate", report_b, "Candidate report")->required();
    compare->add_option("--out", compare_out, "Comparison document")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_set) apply_seed(cfg, seed);
        if (generate->parsed()) return cmd_generate(cfg, out_dir);
        if (train->parsed()) return cmd_train(cfg, dataset_path, ckpt_path, history_path);
        if (finetune->parsed())
            return cmd_finetune(cfg, in_ckpt, strategy, dataset_path, out_ckpt);
        if (embed->parsed()) return cmd_embed(in_ckpt, dataset_path, embed_prefix);
        if (eval->parsed()) return cmd_eval(embed_prefix, dataset_path, ks, report_path);
        if (compare->parsed()) return cmd_compare(report_a, report_b, compare_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
