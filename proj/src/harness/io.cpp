#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fdilab/harness.hpp"

#include "json.hpp"

namespace fdilab::harness {
namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

nlohmann::json scenario_to_json(const ScenarioConfig& config) {
    return {{"case_name", config.case_name},       {"case_path", config.case_path},
            {"n_samples", config.n_samples},       {"noise_percent", config.noise_percent},
            {"profile_amplitude", config.profile_amplitude},
            {"scale_jitter", config.scale_jitter}, {"seed", config.seed},
            {"schema", config.schema}};
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig config;
    config.case_name = j.at("case_name").get<std::string>();
    config.case_path = j.at("case_path").get<std::string>();
    config.n_samples = j.at("n_samples").get<std::size_t>();
    config.noise_percent = j.at("noise_percent").get<double>();
    config.profile_amplitude = j.at("profile_amplitude").get<double>();
    config.scale_jitter = j.at("scale_jitter").get<double>();
    config.seed = j.at("seed").get<std::uint64_t>();
    config.schema = j.at("schema").get<std::string>();
    return config;
}

void write_rows(std::ofstream& out, const grid::NetworkCase& net,
                const pf::MeasurementSchema& schema, const Matrix& Z,
                const char* provenance) {
    out << 't';
    for (const auto& id : schema.channel_ids(net)) out << ',' << id;
    if (provenance) out << ",provenance";
    out << '\n';
    for (std::size_t i = 0; i < Z.rows; ++i) {
        out << i;
        for (std::size_t j = 0; j < Z.cols; ++j) out << ',' << format_value(Z(i, j));
        if (provenance) out << ',' << provenance;
        out << '\n';
    }
}

}  // namespace

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset: " + path);
    write_rows(out, data.net, data.schema, data.Z, nullptr);

    nlohmann::json meta;
    meta["scenario"] = scenario_to_json(data.config);
    meta["case_text"] = grid::to_matpower_string(data.net);
    meta["schema_hash"] = data.schema.hash(data.net);
    meta["sigma"] = data.noise.sigma;
    meta["skipped"] = data.skipped;
    meta["states_vm"] = nlohmann::json::array();
    meta["states_va"] = nlohmann::json::array();
    for (const auto& st : data.states) {
        meta["states_vm"].push_back(st.vm);
        meta["states_va"].push_back(st.va);
    }
    meta["ztrue"] = data.Ztrue.a;
    std::ofstream side(path + ".json");
    if (!side) throw std::runtime_error("cannot write sidecar: " + path + ".json");
    side << meta.dump(1) << '\n';
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw std::runtime_error("missing dataset sidecar: " + path + ".json");
    nlohmann::json meta = nlohmann::json::parse(side);

    Dataset data;
    data.config = scenario_from_json(meta.at("scenario"));
    data.net = grid::parse_matpower_case(meta.at("case_text").get<std::string>(),
                                         data.config.case_name);
    data.schema = schema_by_name(data.net, data.config.schema);
    data.noise.sigma = meta.at("sigma").get<std::vector<double>>();
    data.skipped = meta.at("skipped").get<std::vector<std::size_t>>();
    for (std::size_t i = 0; i < meta.at("states_vm").size(); ++i) {
        pf::StateVector st;
        st.vm = meta.at("states_vm").at(i).get<std::vector<double>>();
        st.va = meta.at("states_va").at(i).get<std::vector<double>>();
        data.states.push_back(std::move(st));
    }

    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
    std::vector<Vector> rows;
    const std::size_t m = data.schema.size();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::getline(ls, tok, ',');  // t column
        Vector row;
        row.reserve(m);
        while (std::getline(ls, tok, ',')) {
            if (row.size() == m) break;  // provenance or trailing columns
            row.push_back(std::stod(tok));
        }
        if (row.size() != m)
            throw std::runtime_error("dataset row width mismatch in " + path);
        rows.push_back(std::move(row));
    }
    data.Z = Matrix(rows.size(), m);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) data.Z(i, j) = rows[i][j];

    const auto ztrue = meta.at("ztrue").get<std::vector<double>>();
    if (ztrue.size() == data.Z.a.size()) {
        data.Ztrue = Matrix(data.Z.rows, m);
        data.Ztrue.a = ztrue;
    }
    return data;
}

void write_attacked_csv(const std::string& path, const Dataset& nominal, const Matrix& Za,
                        const std::string& attack_json) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write attacked series: " + path);
    write_rows(out, nominal.net, nominal.schema, Za, "attacked");
    std::ofstream side(path + ".json");
    if (!side) throw std::runtime_error("cannot write sidecar: " + path + ".json");
    nlohmann::json meta;
    meta["attack"] = nlohmann::json::parse(attack_json);
    meta["scenario"] = scenario_to_json(nominal.config);
    meta["schema_hash"] = nominal.schema.hash(nominal.net);
    meta["sigma"] = nominal.noise.sigma;
    side << meta.dump(1) << '\n';
}

Matrix load_attacked_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open attacked series: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    std::size_t m = 0;
    {
        std::istringstream hs(line);
        std::string tok;
        while (std::getline(hs, tok, ',')) ++m;
        if (m < 3) throw std::runtime_error("malformed attacked header in " + path);
        m -= 2;  // t and provenance columns
    }
    std::vector<Vector> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::getline(ls, tok, ',');
        Vector row;
        row.reserve(m);
        for (std::size_t j = 0; j < m; ++j) {
            if (!std::getline(ls, tok, ','))
                throw std::runtime_error("attacked row width mismatch in " + path);
            row.push_back(std::stod(tok));
        }
        rows.push_back(std::move(row));
    }
    Matrix Z(rows.size(), m);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) Z(i, j) = rows[i][j];
    return Z;
}

SweepTable load_sweep_table(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot open sweep table: " + json_path);
    nlohmann::json j = nlohmann::json::parse(in);
    SweepTable table;
    for (const auto& [k, v] : j.at("metadata").items())
        table.metadata[k] = v.get<std::string>();
    for (const auto& rj : j.at("rows")) {
        SweepRow row;
        row.kind = rj.at("kind").get<std::string>();
        row.value = rj.at("value").get<double>();
        row.seed = rj.at("seed").get<std::uint64_t>();
        for (const auto& [k, v] : rj.at("metrics").items()) row.metrics[k] = v.get<double>();
        table.rows.push_back(std::move(row));
    }
    return table;
}

void emit_report(const SweepTable& table, const std::string& out_prefix) {
    if (table.rows.empty()) throw std::invalid_argument("emit_report: empty table");
    const auto parent = std::filesystem::path(out_prefix).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);

    // union of metric keys, sorted for a canonical column order
    std::vector<std::string> keys;
    for (const auto& row : table.rows)
        for (const auto& [k, _] : row.metrics)
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());

    {
        std::ofstream csv(out_prefix + ".csv");
        if (!csv) throw std::runtime_error("cannot write report csv");
        csv << "kind,value,seed";
        for (const auto& k : keys) csv << ',' << k;
        csv << '\n';
        for (const auto& row : table.rows) {
            csv << row.kind << ',' << format_metric(row.value) << ',' << row.seed;
            for (const auto& k : keys) {
                csv << ',';
                auto it = row.metrics.find(k);
                if (it != row.metrics.end()) csv << format_metric(it->second);
            }
            csv << '\n';
        }
    }

    {
        nlohmann::json j;
        j["metadata"] = table.metadata;
        j["rows"] = nlohmann::json::array();
        for (const auto& row : table.rows) {
            nlohmann::json rj;
            rj["kind"] = row.kind;
            rj["value"] = row.value;
            rj["seed"] = row.seed;
            rj["metrics"] = row.metrics;
            j["rows"].push_back(std::move(rj));
        }
        std::ofstream js(out_prefix + ".json");
        if (!js) throw std::runtime_error("cannot write report json");
        js << j.dump(1) << '\n';
    }

    // one gnuplot-ready series per metric: value vs seed-averaged metric
    for (const auto& key : keys) {
        std::map<double, std::pair<double, std::size_t>> agg;
        for (const auto& row : table.rows) {
            auto it = row.metrics.find(key);
            if (it == row.metrics.end()) continue;
            auto& [sum, count] = agg[row.value];
            sum += it->second;
            ++count;
        }
        if (agg.empty()) continue;
        std::ofstream dat(out_prefix + "_" + key + ".dat");
        dat << "# value " << key << " (mean over seeds)\n";
        for (const auto& [value, sc] : agg)
            dat << format_metric(value) << ' '
                << format_metric(sc.first / static_cast<double>(sc.second)) << '\n';
    }

    // pivot table for the bypass-rate metrics of a gamma sweep
    if (table.rows.front().kind == "gamma") {
        std::ofstream piv(out_prefix + "_table.csv");
        piv << "metric";
        for (const auto& row : table.rows) piv << ',' << format_metric(row.value);
        piv << '\n';
        for (const char* key : {"succ_bdd", "succ_learn"}) {
            piv << key;
            for (const auto& row : table.rows) {
                piv << ',';
                auto it = row.metrics.find(key);
                if (it != row.metrics.end()) piv << format_metric(100.0 * it->second);
            }
            piv << '\n';
        }
    }
}

}  // namespace fdilab::harness
