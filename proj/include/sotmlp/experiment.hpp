#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sotmlp/arch.hpp"
#include "sotmlp/checkpoint.hpp"
#include "sotmlp/config.hpp"
#include "sotmlp/data.hpp"
#include "sotmlp/train.hpp"

namespace sotmlp {

inline constexpr int kReportSchemaVersion = 1;

// MNIST directory resolution order: config value, $SOTMLP_DATA, ./data/mnist.
std::string resolve_data_dir(const ExperimentConfig& config);

// Crossbar-side counterpart of evaluate(): runs every row through the
// programmed pipeline and scores the argmax.
EvalResult evaluate_pipeline(MlpPipeline& p, const Matrix& images,
                             const std::vector<std::uint8_t>& labels);

struct RunReport {
    Metrics oracle;    // binarized student evaluated in exact arithmetic
    Metrics crossbar;  // same student programmed into the analog pipeline
    CycleCounter counter;
    PowerAreaReport power_area;
    Checkpoint checkpoint;
    std::string config_echo;       // input config bytes, unmodified
    std::string effective_config;  // config after overrides, serialized
    double wall_seconds = 0.0;
};

// Full training run with per-epoch oracle and crossbar evaluation. Reads the
// dataset but writes nothing; pair with write_run_artifacts.
RunReport run_train(const ExperimentConfig& config, const std::string& config_echo);

// Writes metrics_oracle.csv, metrics_crossbar.csv, checkpoint.bin,
// config_echo.txt, effective_config.txt and report.json under out_dir,
// each atomically.
void write_run_artifacts(const RunReport& report, const ExperimentConfig& config);

// CSV with header epoch,train_accuracy,test_accuracy,mean_loss.
std::string metrics_csv(const Metrics& m);

std::string run_report_json(const RunReport& report, const ExperimentConfig& config);

struct InferReport {
    std::vector<std::size_t> classes;  // argmax per image
    Matrix activations;                // one row of per-class outputs per image
    std::uint64_t crossbar_cycles = 0;
    std::uint64_t gpu_cycles = 0;
    double speedup = 0.0;
};

// Programs the checkpoint's binary student into a fresh pipeline and runs the
// given images (rows, already scaled to [0,1]) through it.
InferReport run_infer(const ExperimentConfig& config, const Checkpoint& ck, const Matrix& images);

// Two-column CSV (v_in,v_out), `points` rows evenly spaced across [lo, hi].
std::string export_vtc_csv(const ExperimentConfig& config, double lo, double hi,
                           std::size_t points);

struct SweepRow {
    std::string value;
    double oracle_test_accuracy = 0.0;
    double crossbar_test_accuracy = 0.0;
};

// Runs a full training per value of config key `key`; order preserved.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::string& key,
                                const std::vector<std::string>& values);

std::string sweep_csv(const std::string& key, const std::vector<SweepRow>& rows);

// Static hardware summary: control-signal table, cycle model constants and
// power/area totals for the configured topology.
std::string hardware_report_json(const ExperimentConfig& config);

} // namespace sotmlp
