// fdilab command line: synthetic measurement generation, detector training,
// manifold-aligned perturbation and the experiment sweeps.

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fdilab/attack.hpp"
#include "fdilab/detectors.hpp"
#include "fdilab/harness.hpp"
#include "fdilab/stats.hpp"

using namespace fdilab;

namespace {

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::istringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> out;
    std::istringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
    return out;
}

basis::BasisMode parse_basis_mode(const std::string& name, const grid::NetworkCase& net) {
    if (name == "dense") return basis::BasisMode::Dense;
    if (name == "sparse") return basis::BasisMode::Sparse;
    const std::size_t n = net.n_bus();
    return (n + 2 * n * n <= 2000) ? basis::BasisMode::Dense : basis::BasisMode::Sparse;
}

int cmd_case_parse(const std::string& path, bool canonical) {
    auto net = grid::load_case_file(path);
    if (canonical) {
        std::cout << grid::to_matpower_string(net);
        return 0;
    }
    const auto ybus = grid::build_ybus(net);
    std::size_t in_service = net.in_service_branches().size();
    std::cout << "case " << net.name << ": " << net.n_bus() << " buses, "
              << net.branches.size() << " branches (" << in_service << " in service), "
              << net.gens.size() << " generators, base " << net.base_mva << " MVA\n";
    std::cout << "slack bus " << net.buses[net.slack_index()].ext_id << ", Y-bus "
              << ybus.n << "x" << ybus.n << '\n';
    const auto schema = pf::default_schema(net);
    std::cout << "default schema: " << schema.size() << " channels, hash "
              << schema.hash(net) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fdilab: measurement-manifold laboratory for AC state estimation"};
    app.require_subcommand(1);

    // ---- case ----
    auto* case_cmd = app.add_subcommand("case", "inspect MATPOWER case files");
    auto* case_parse = case_cmd->add_subcommand("parse", "parse and summarize a case file");
    std::string case_file;
    bool case_canonical = false;
    case_parse->add_option("file", case_file, "path to a MATPOWER .m file")->required();
    case_parse->add_flag("--canonical", case_canonical, "print the canonical form");

    // ---- data gen ----
    auto* data_cmd = app.add_subcommand("data", "synthetic measurement data");
    auto* data_gen = data_cmd->add_subcommand("gen", "generate a nominal time series");
    harness::ScenarioConfig scenario;
    std::string data_out = "nominal.csv";
    data_gen->add_option("--case", scenario.case_name, "bundled case name");
    data_gen->add_option("--case-file", scenario.case_path, "explicit case file path");
    data_gen->add_option("--n", scenario.n_samples, "number of samples");
    data_gen->add_option("--noise", scenario.noise_percent, "noise percent (> 0)");
    data_gen->add_option("--seed", scenario.seed, "random seed");
    data_gen->add_option("--schema", scenario.schema, "default | pinj");
    data_gen->add_option("--out", data_out, "output CSV path")->required();

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train manifold models");
    std::string train_variant, train_data, train_out = "model.json", train_basis = "auto";
    std::size_t train_latent = 0, mask_keep = 0;
    nn::TrainConfig tc;
    train_cmd->add_option("variant", train_variant, "pgae | ae | masked")->required();
    train_cmd->add_option("--data", train_data, "nominal dataset CSV")->required();
    train_cmd->add_option("--latent", train_latent, "latent dimension (0 = free-state count)");
    train_cmd->add_option("--basis", train_basis, "dense | sparse | auto");
    train_cmd->add_option("--epochs", tc.max_epochs, "training epochs");
    train_cmd->add_option("--lr", tc.learning_rate, "Adam learning rate");
    train_cmd->add_option("--batch", tc.batch_size, "mini-batch size");
    train_cmd->add_option("--seed", tc.seed, "training seed");
    train_cmd->add_option("--mask-keep", mask_keep, "masked variant: kept channel count m0");
    train_cmd->add_option("--out", train_out, "model checkpoint path");

    // ---- attack ----
    auto* attack_cmd = app.add_subcommand("attack", "generate perturbed measurements");
    std::string attack_model, attack_data, attack_out = "attacked.csv", attack_meters,
                attack_profile;
    double attack_c = 0.1, attack_gamma = 1.0;
    std::size_t attack_m0 = 0;
    attack_cmd->add_option("--model", attack_model, "model checkpoint")->required();
    attack_cmd->add_option("--data", attack_data, "nominal dataset CSV")->required();
    attack_cmd->add_option("--c", attack_c, "uniform latent perturbation entry");
    attack_cmd->add_option("--gamma", attack_gamma, "scalar multiplier on c");
    attack_cmd->add_option("--meters", attack_meters, "comma list of channel indices to touch");
    attack_cmd->add_option("--profile", attack_profile,
                           "channel-error profile JSON for critical-meter selection");
    attack_cmd->add_option("--m0", attack_m0, "meter budget used with --profile");
    attack_cmd->add_option("--out", attack_out, "attacked CSV path");

    // ---- detect ----
    auto* detect_cmd = app.add_subcommand("detect", "run the detectors over a series");
    std::string det_nominal, det_series, det_learned;
    double det_alpha = 0.05;
    detect_cmd->add_option("--nominal", det_nominal, "nominal dataset CSV")->required();
    detect_cmd->add_option("--series", det_series, "series to score (defaults to nominal)");
    detect_cmd->add_option("--alpha", det_alpha, "significance level");
    detect_cmd->add_option("--learned", det_learned, "standard-AE checkpoint for succ_learn");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "run an experiment sweep");
    std::string sweep_kind, sweep_grid, sweep_seeds = "1", sweep_out = "sweep";
    harness::ScenarioConfig sweep_scenario;
    sweep_cmd->add_option("--kind", sweep_kind,
                          "alpha|gamma|latent_dim|data_volume|meter_budget|connectivity")
        ->required();
    sweep_cmd->add_option("--grid", sweep_grid, "comma-separated grid values");
    sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated replicate seeds");
    sweep_cmd->add_option("--case", sweep_scenario.case_name, "bundled case name");
    sweep_cmd->add_option("--n", sweep_scenario.n_samples, "samples per series");
    sweep_cmd->add_option("--noise", sweep_scenario.noise_percent, "noise percent");
    sweep_cmd->add_option("--schema", sweep_scenario.schema, "default | pinj");
    sweep_cmd->add_option("--seed", sweep_scenario.seed, "master seed");
    sweep_cmd->add_option("--out", sweep_out, "output prefix");

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "re-emit report files from a table JSON");
    std::string report_in, report_out = "report";
    report_cmd->add_option("--in", report_in, "sweep table JSON")->required();
    report_cmd->add_option("--out", report_out, "output prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (case_parse->parsed()) return cmd_case_parse(case_file, case_canonical);

        if (data_gen->parsed()) {
            auto data = harness::generate_timeseries(scenario);
            harness::write_dataset_csv(data_out, data);
            std::cout << "wrote " << data.Z.rows << " samples x " << data.m()
                      << " channels to " << data_out << '\n';
            return 0;
        }

        if (train_cmd->parsed()) {
            auto data = harness::load_dataset_csv(train_data);
            models::TrainReport report;
            if (train_variant == "pgae" || train_variant == "masked") {
                const auto mode = parse_basis_mode(train_basis, data.net);
                const auto spec = basis::build_basis_spec(data.net, mode);
                if (train_variant == "pgae") {
                    auto model = models::train_pgae(data.Z, data.net, spec, train_latent, tc,
                                                    &report);
                    model.info.schema_hash = data.schema.hash(data.net);
                    models::save_model_file(train_out, model.to_json());
                } else {
                    if (mask_keep == 0) throw std::runtime_error("masked training needs --mask-keep");
                    models::MaskConfig mask{mask_keep, tc.seed + 101};
                    auto out = models::train_masked_pgae(data.Z, data.net, spec, train_latent,
                                                         mask, tc, &report);
                    out.model.info.schema_hash = data.schema.hash(data.net);
                    models::save_model_file(train_out, out.model.to_json());
                    nlohmann::json prof;
                    prof["channel_errors"] = out.channel_errors;
                    prof["m0"] = mask_keep;
                    models::save_model_file(train_out + ".profile.json", prof.dump(1));
                }
            } else if (train_variant == "ae") {
                const std::size_t d =
                    train_latent ? train_latent : 2 * (data.net.n_bus() - 1);
                auto model = models::train_standard_ae(data.Z, d, tc, &report);
                model.info.case_name = data.net.name;
                model.info.schema_hash = data.schema.hash(data.net);
                models::save_model_file(train_out, model.to_json());
            } else {
                throw std::runtime_error("unknown train variant: " + train_variant);
            }
            std::cout << "trained " << train_variant << " in " << report.seconds
                      << " s, loss " << report.initial_loss << " -> " << report.final_loss
                      << ", saved " << train_out << '\n';
            return 0;
        }

        if (attack_cmd->parsed()) {
            auto data = harness::load_dataset_csv(attack_data);
            const std::string model_json = models::load_model_file(attack_model);
            const auto kind = nlohmann::json::parse(model_json).at("kind").get<std::string>();

            attack::LimitedAttackPlan plan;
            if (!attack_meters.empty()) {
                for (double v : parse_grid(attack_meters))
                    plan.critical_set.push_back(static_cast<std::size_t>(v));
            } else if (!attack_profile.empty()) {
                const auto prof = nlohmann::json::parse(models::load_model_file(attack_profile));
                const auto errors = prof.at("channel_errors").get<std::vector<double>>();
                if (attack_m0 == 0) throw std::runtime_error("--profile needs --m0");
                plan = attack::select_critical_meters(errors, attack_m0);
            }

            Matrix Za;
            std::size_t d = 0;
            if (kind == "pgae") {
                auto model = models::PgAeModel::from_json(model_json);
                d = model.latent_dim();
                auto ac = attack::AttackConfig::uniform(d, attack_c, attack_gamma);
                if (plan.critical_set.empty()) {
                    Za = harness::attack_series(model, data.Z, ac.c, attack_gamma);
                } else {
                    Za = Matrix(data.Z.rows, data.m());
                    for (std::size_t i = 0; i < data.Z.rows; ++i) {
                        Vector z(data.Z.row(i), data.Z.row(i) + data.m());
                        Vector za = attack::perturb_limited(model, z, ac, plan);
                        for (std::size_t j = 0; j < data.m(); ++j) Za(i, j) = za[j];
                    }
                }
            } else {
                auto model = models::StandardAeModel::from_json(model_json);
                d = model.latent_dim();
                auto ac = attack::AttackConfig::uniform(d, attack_c, attack_gamma);
                if (plan.critical_set.empty()) {
                    Za = harness::attack_series(model, data.Z, ac.c, attack_gamma);
                } else {
                    Za = Matrix(data.Z.rows, data.m());
                    for (std::size_t i = 0; i < data.Z.rows; ++i) {
                        Vector z(data.Z.row(i), data.Z.row(i) + data.m());
                        Vector za = attack::perturb_limited(model, z, ac, plan);
                        for (std::size_t j = 0; j < data.m(); ++j) Za(i, j) = za[j];
                    }
                }
            }

            nlohmann::json ac_json;
            ac_json["c_value"] = attack_c;
            ac_json["gamma"] = attack_gamma;
            ac_json["latent_dim"] = d;
            ac_json["meters"] = plan.critical_set;
            harness::write_attacked_csv(attack_out, data, Za, ac_json.dump());
            std::cout << "wrote attacked series to " << attack_out << '\n';
            return 0;
        }

        if (detect_cmd->parsed()) {
            auto nominal = harness::load_dataset_csv(det_nominal);
            Matrix series = det_series.empty() ? nominal.Z : harness::load_attacked_csv(det_series);
            pf::MeasurementEvaluator eval(nominal.net, nominal.schema);
            const std::size_t s = pf::FreeStateLayout::standard(nominal.net).size();
            auto bdd = est::BddConfig::for_schema(det_alpha, nominal.m(), s);

            detect::LearnedDetector learned;
            bool has_learned = false;
            if (!det_learned.empty()) {
                learned.ae = models::StandardAeModel::from_json(
                    models::load_model_file(det_learned));
                learned.alpha = det_alpha;
                const std::size_t half = nominal.Z.rows / 2;
                Matrix calib(nominal.Z.rows - half, nominal.m());
                for (std::size_t i = 0; i < calib.rows; ++i)
                    for (std::size_t j = 0; j < calib.cols; ++j)
                        calib(i, j) = nominal.Z(half + i, j);
                learned.tau_learn = stats::empirical_quantile(
                    detect::reconstruction_errors(learned.ae, calib), 1.0 - det_alpha);
                has_learned = true;
            }

            auto report = detect::evaluate_bypass(series, bdd, nominal.noise, eval,
                                                  has_learned ? &learned : nullptr);
            std::cout << "samples " << report.samples << ", alpha " << det_alpha << ", tau "
                      << bdd.tau << " (dof " << bdd.dof << ")\n";
            std::cout << "succ_bdd " << report.succ_bdd << " (median residual "
                      << report.median_residual << ", estimation failures "
                      << report.estimation_failures << ")\n";
            if (has_learned) std::cout << "succ_learn " << report.succ_learn << '\n';
            return 0;
        }

        if (sweep_cmd->parsed()) {
            harness::SweepSpec spec;
            spec.kind = sweep_kind;
            if (!sweep_grid.empty()) spec.grid = parse_grid(sweep_grid);
            spec.seeds = parse_seeds(sweep_seeds);
            auto table = harness::run_sweep(spec, sweep_scenario);
            harness::emit_report(table, sweep_out);
            std::cout << "sweep " << sweep_kind << ": " << table.rows.size()
                      << " rows -> " << sweep_out << ".{csv,json,*.dat}\n";
            return 0;
        }

        if (report_cmd->parsed()) {
            auto table = harness::load_sweep_table(report_in);
            harness::emit_report(table, report_out);
            std::cout << "report written to " << report_out << ".{csv,json,*.dat}\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "fdilab: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
