#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "sbir/dataset.hpp"
#include "sbir/retrieval.hpp"
#include "sbir/synth.hpp"
#include "sbir/training.hpp"

namespace sbir {

using Json = nlohmann::ordered_json;

// Embedding file: "FGEM", version u32, count u32, dim u32, ids u64[count],
// then row-major little-endian 64-bit floats.
void write_embeddings(const std::filesystem::path& path,
                      const std::vector<std::uint64_t>& ids,
                      const Eigen::MatrixXd& embeddings);
struct EmbeddingFile {
    std::vector<std::uint64_t> ids;
    Eigen::MatrixXd embeddings;
};
EmbeddingFile read_embeddings(const std::filesystem::path& path);

// Checkpoint: same little-endian container idea with named sections, magic
// "FGCP"; parameters, Adam moments and a JSON metadata section.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// 16-bit binary PGM (P5, maxval 65535); intensities quantized from [0,1].
void write_pgm(const std::filesystem::path& path, const Raster& raster);
Raster read_pgm(const std::filesystem::path& path);

// Dataset manifest: JSON-lines, one header record then one record per
// instance; rasters stored as PGM files next to the manifest.
void write_dataset(const std::filesystem::path& dir, const DatasetIndex& ds);
DatasetIndex read_dataset(const std::filesystem::path& manifest_path);

Json report_to_json(const RetrievalReport& report, const Json& provenance);
RetrievalReport report_from_json(const Json& j);

// Config documents; unknown keys are rejected.
Json to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const Json& j);
Json to_json(const BatchSpec& s);
BatchSpec batch_spec_from_json(const Json& j);
Json to_json(const LossConfig& s);
LossConfig loss_config_from_json(const Json& j);
Json to_json(const TrainSchedule& s);
TrainSchedule train_schedule_from_json(const Json& j);
Json to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const Json& j);

std::string strategy_name(SamplingStrategy s);
SamplingStrategy strategy_from_name(const std::string& name);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace sbir
