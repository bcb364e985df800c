#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdilab/detectors.hpp"
#include "fdilab/estimation.hpp"
#include "fdilab/grid.hpp"
#include "fdilab/models.hpp"
#include "fdilab/powerflow.hpp"

namespace fdilab::harness {

struct ScenarioConfig {
    std::string case_name = "case14";
    std::string case_path;              // optional explicit file; overrides case_name
    std::size_t n_samples = 1440;
    double noise_percent = 2.0;         // must be > 0; use 1e-9 for noise-free studies
    double profile_amplitude = 0.2;     // daily sinusoid in [1-a, 1+a]
    double scale_jitter = 0.1;          // per-step uniform factor in [1-j, 1+j]
    std::uint64_t seed = 1;
    std::string schema = "default";     // "default" | "pinj"
};

struct Dataset {
    grid::NetworkCase net;
    pf::MeasurementSchema schema;
    Matrix Z;                            // noisy measurements, one row per step
    Matrix Ztrue;                        // noise-free values
    std::vector<pf::StateVector> states; // ground-truth states
    pf::NoiseModel noise;
    ScenarioConfig config;
    std::vector<std::size_t> skipped;    // steps dropped after damped retries

    std::size_t m() const { return schema.size(); }
    Matrix head(std::size_t rows) const;  // first rows of Z (chronological)
};

pf::MeasurementSchema schema_by_name(const grid::NetworkCase& net, const std::string& name);

// Scales loads by a daily sinusoid times per-step jitter, solves the power
// flow per step, measures, then adds Gaussian noise with per-channel sigma
// noise% of max(mean |true value|, 0.1 p.u.).
Dataset generate_timeseries(const ScenarioConfig& config);

// CSV I/O. Data files carry a JSON sidecar at <path>.json with the scenario,
// sigmas and schema identity; attacked files add a provenance column.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset load_dataset_csv(const std::string& path);
void write_attacked_csv(const std::string& path, const Dataset& nominal, const Matrix& Za,
                        const std::string& attack_json);
Matrix load_attacked_csv(const std::string& path);

struct SweepSpec {
    std::string kind;               // alpha|gamma|latent_dim|data_volume|meter_budget|connectivity
    std::vector<double> grid;
    std::vector<std::uint64_t> seeds = {1};
};

struct SweepRow {
    std::string kind;
    double value = 0.0;
    std::uint64_t seed = 0;
    std::map<std::string, double> metrics;  // canonical key order
};

struct SweepTable {
    std::vector<SweepRow> rows;
    std::map<std::string, std::string> metadata;
};

SweepTable run_sweep(const SweepSpec& spec, const ScenarioConfig& scenario);

// CSV + JSON metadata + one gnuplot .dat per metric.
void emit_report(const SweepTable& table, const std::string& out_prefix);

// Reads back the JSON written by emit_report.
SweepTable load_sweep_table(const std::string& json_path);

// Shared experiment pieces, reused by sweeps, the CLI and the acceptance run.
struct ExperimentContext {
    Dataset data;
    models::PgAeModel model;
    models::TrainReport train_report;
};

nn::TrainConfig default_train_config(std::uint64_t seed);

ExperimentContext train_pgae_experiment(const ScenarioConfig& scenario,
                                        basis::BasisMode mode, std::size_t latent_dim = 0,
                                        std::size_t train_samples = 0);

Matrix attack_series(const models::PgAeModel& model, const Matrix& Z, const Vector& c,
                     double gamma);
Matrix attack_series(const models::StandardAeModel& model, const Matrix& Z, const Vector& c,
                     double gamma);

}  // namespace fdilab::harness
