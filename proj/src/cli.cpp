#include "inmo/cli.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "inmo/error.hpp"
#include "inmo/eval.hpp"
#include "inmo/random.hpp"
#include "inmo/theory.hpp"

namespace inmo::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_value(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (value.empty() || ec != std::errc() || ptr != last)
        throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
    return out;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <class T, class F>
Setter number(F field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_value<T>(k, v); };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"data.path", [](RunConfig& c, const std::string&, const std::string& v) { c.data_path = v; }},
        {"data.format",
         [](RunConfig& c, const std::string&, const std::string& v) {
             try {
                 c.data_format = parse_file_format(v);
             } catch (const std::exception& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"preprocess.rating_threshold", number<double>([](RunConfig& c) -> double& { return c.preprocess.rating_threshold; })},
        {"preprocess.min_degree", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.preprocess.min_degree; })},
        {"split.seed", number<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.split_seed; })},
        {"split.train", number<double>([](RunConfig& c) -> double& { return c.ratios.train; })},
        {"split.valid", number<double>([](RunConfig& c) -> double& { return c.ratios.valid; })},
        {"split.test", number<double>([](RunConfig& c) -> double& { return c.ratios.test; })},
        {"templates.indicator",
         [](RunConfig& c, const std::string&, const std::string& v) { c.indicator = parse_indicator(v); }},
        {"templates.user_frac", number<double>([](RunConfig& c) -> double& { return c.user_frac; })},
        {"templates.item_frac", number<double>([](RunConfig& c) -> double& { return c.item_frac; })},
        {"templates.svd_dim", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.svd_dim; })},
        {"train.d", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.train.d; })},
        {"train.lr", number<double>([](RunConfig& c) -> double& { return c.train.lr; })},
        {"train.l2_lambda", number<double>([](RunConfig& c) -> double& { return c.train.l2_lambda; })},
        {"train.drop_rate", number<double>([](RunConfig& c) -> double& { return c.train.drop_rate; })},
        {"train.beta", number<double>([](RunConfig& c) -> double& { return c.train.beta; })},
        {"train.layers", number<int>([](RunConfig& c) -> int& { return c.train.layers; })},
        {"train.batch_size", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.train.batch_size; })},
        {"train.max_epochs", number<int>([](RunConfig& c) -> int& { return c.train.max_epochs; })},
        {"train.patience", number<int>([](RunConfig& c) -> int& { return c.train.patience; })},
        {"train.alpha_init", number<double>([](RunConfig& c) -> double& { return c.train.alpha_init; })},
        {"train.alpha_final", number<double>([](RunConfig& c) -> double& { return c.train.alpha_final; })},
        {"train.anneal_epochs", number<int>([](RunConfig& c) -> int& { return c.train.anneal_epochs; })},
        {"train.seed", number<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.train.seed; })},
        {"train.backbone",
         [](RunConfig& c, const std::string&, const std::string& v) {
             try {
                 c.train.backbone = parse_backbone(v);
             } catch (const std::exception& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"train.init_std", number<double>([](RunConfig& c) -> double& { return c.train.init_std; })},
        {"train.eval_k", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.train.eval_k; })},
        {"scenario.kind",
         [](RunConfig& c, const std::string&, const std::string& v) {
             try {
                 c.scenario = parse_scenario_kind(v);
             } catch (const std::exception& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"scenario.hold_frac", number<double>([](RunConfig& c) -> double& { return c.hold_frac; })},
        {"scenario.entity_frac", number<double>([](RunConfig& c) -> double& { return c.entity_frac; })},
        {"scenario.seed", number<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.scenario_seed; })},
        {"eval.k", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.eval_k; })},
        {"theory.instances", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.theory_instances; })},
        {"theory.rows", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.theory_rows; })},
        {"theory.cols", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.theory_cols; })},
        {"theory.density", number<double>([](RunConfig& c) -> double& { return c.theory_density; })},
        {"theory.d", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.theory_d; })},
        {"theory.seed", number<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.theory_seed; })},
        {"curve.d", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.curve_d; })},
        {"curve.indicators",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             std::vector<Indicator> out;
             for (const auto& name : split_list(v)) out.push_back(parse_indicator(name));
             if (out.empty()) throw ConfigError("key '" + k + "' needs at least one indicator");
             c.curve_indicators = out;
         }},
        {"curve.fractions",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             std::vector<double> out;
             for (const auto& f : split_list(v)) out.push_back(parse_value<double>(k, f));
             if (out.empty()) throw ConfigError("key '" + k + "' needs at least one fraction");
             c.curve_fractions = out;
         }},
        {"dense_cap", number<std::size_t>([](RunConfig& c) -> std::size_t& { return c.dense_cap; })},
    };
    return table;
}

void require(bool cond, const std::string& message) {
    if (!cond) throw ConfigError(message);
}

bool open_unit(double x) { return x > 0.0 && x < 1.0; }
bool half_open_unit(double x) { return x > 0.0 && x <= 1.0; }

std::string edges_text(const InteractionDataset& ds) {
    std::ostringstream out;
    write_edges(out, ds);
    return out.str();
}

std::string keys_text(const InteractionDataset::Keys& keys) {
    std::ostringstream out;
    out << "index\tkey\n";
    for (std::size_t i = 0; i < keys->size(); ++i) out << i << '\t' << (*keys)[i] << '\n';
    return out.str();
}

Matrix random_binary(std::size_t rows, std::size_t cols, double density, std::uint64_t seed) {
    Rng rng(seed);
    Matrix y(rows, cols);
    for (double& v : y.data()) v = uniform_real(rng) < density ? 1.0 : 0.0;
    return y;
}

std::vector<Index> top_fraction(const std::vector<double>& scores, double frac) {
    auto order = rank_by_score(scores);
    order.resize(static_cast<std::size_t>(std::ceil(frac * static_cast<double>(scores.size()) - 1e-9)));
    std::sort(order.begin(), order.end());
    return order;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

void log_metrics(std::ostream& log, const std::string& label, const EvalReport& report) {
    for (const auto& [group, g] : report.groups)
        log << label << " " << group << " (" << g.n_users << " users): recall@" << report.k << " "
            << format_percent(g.mean.recall) << " precision@" << report.k << " " << format_percent(g.mean.precision)
            << " ndcg@" << report.k << " " << format_percent(g.mean.ndcg) << "\n";
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(*this, key, value);
}

void RunConfig::validate() const {
    require(ratios.train > 0.0 && ratios.valid >= 0.0 && ratios.test > 0.0,
            "split ratios must be non-negative with train and test > 0");
    require(std::abs(ratios.train + ratios.valid + ratios.test - 1.0) <= 1e-9, "split ratios must sum to 1");
    require(half_open_unit(user_frac) && half_open_unit(item_frac), "template fractions must lie in (0, 1]");
    require(svd_dim > 0, "templates.svd_dim must be positive");
    require(open_unit(hold_frac), "scenario.hold_frac must lie in (0, 1)");
    require(open_unit(entity_frac), "scenario.entity_frac must lie in (0, 1)");
    require(eval_k > 0, "eval.k must be positive");
    require(theory_instances > 0 && theory_rows > 0 && theory_cols > 0 && theory_d > 0,
            "theory sizes must be positive");
    require(half_open_unit(theory_density), "theory.density must lie in (0, 1]");
    require(curve_d > 0, "curve.d must be positive");
    for (double f : curve_fractions) require(f >= 0.0 && f <= 1.0, "curve.fractions must lie in [0, 1]");
    require(dense_cap > 0, "dense_cap must be positive");
    train.validate();
}

std::vector<std::string> RunConfig::warnings() const { return train.grid_warnings(); }

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
}

void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        try {
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    apply_config_text(cfg, in, path.string());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    cfg.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

nlohmann::json to_json(const RunConfig& c) {
    std::vector<std::string> indicators;
    for (auto ind : c.curve_indicators) indicators.push_back(to_string(ind));
    nlohmann::json train;
    to_json(train, c.train);
    return {{"data", {{"path", c.data_path}, {"format", c.data_format == FileFormat::Tsv ? "tsv" : "csv"}}},
            {"preprocess",
             {{"rating_threshold", c.preprocess.rating_threshold}, {"min_degree", c.preprocess.min_degree}}},
            {"split",
             {{"seed", c.split_seed}, {"train", c.ratios.train}, {"valid", c.ratios.valid}, {"test", c.ratios.test}}},
            {"templates",
             {{"indicator", to_string(c.indicator)},
              {"user_frac", c.user_frac},
              {"item_frac", c.item_frac},
              {"svd_dim", c.svd_dim}}},
            {"train", train},
            {"scenario",
             {{"kind", to_string(c.scenario)},
              {"hold_frac", c.hold_frac},
              {"entity_frac", c.entity_frac},
              {"seed", c.scenario_seed}}},
            {"eval", {{"k", c.eval_k}}},
            {"theory",
             {{"instances", c.theory_instances},
              {"rows", c.theory_rows},
              {"cols", c.theory_cols},
              {"density", c.theory_density},
              {"d", c.theory_d},
              {"seed", c.theory_seed}}},
            {"curve", {{"d", c.curve_d}, {"indicators", indicators}, {"fractions", c.curve_fractions}}},
            {"dense_cap", c.dense_cap}};
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(md[i]);
    return out.str();
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw DataError("cannot create output directory '" + root_.string() + "': " + ec.message());
}

void OutputDir::write(const std::string& name, const std::string& contents) {
    const auto path = root_ / name;
    std::ofstream out(path, std::ios::binary);
    out << contents;
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    hashes_[name] = sha256_hex(contents);
}

void OutputDir::write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

void OutputDir::finish(const std::string& command, nlohmann::json metadata) {
    const nlohmann::json manifest = {{"command", command}, {"files", hashes_}};
    const std::string text = manifest.dump(2) + "\n";
    std::ofstream out(root_ / "manifest.json", std::ios::binary);
    out << text;
    if (!out) throw DataError("cannot write manifest in '" + root_.string() + "'");
    metadata["command"] = command;
    metadata["manifest_sha256"] = sha256_hex(text);
    std::ofstream meta(root_ / "metadata.json", std::ios::binary);
    meta << metadata.dump(2) << "\n";
    if (!meta) throw DataError("cannot write metadata in '" + root_.string() + "'");
}

Prepared prepare(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw ConfigError("data.path is not set");
    const auto raw = load_interactions(cfg.data_path, cfg.data_format);
    Prepared p;
    p.raw_records = raw.records.size();
    p.dataset = preprocess(raw, cfg.preprocess);
    if (p.dataset.num_edges() == 0)
        throw DataError("no interactions survive preprocessing of '" + cfg.data_path + "'");
    p.split = split_per_user(p.dataset, cfg.ratios, cfg.split_seed);
    return p;
}

InductiveScenario build_scenario(const RunConfig& cfg, const DatasetSplit& split) {
    switch (cfg.scenario) {
        case ScenarioKind::Transductive: return make_transductive_scenario(split);
        case ScenarioKind::NewInteractions:
            return make_new_interactions_scenario(split, cfg.hold_frac, cfg.scenario_seed);
        case ScenarioKind::NewUsersItems: return make_new_users_items_scenario(split, cfg.entity_frac, cfg.scenario_seed);
    }
    throw ConfigError("unknown scenario");
}

namespace {

TemplateSet templates_for(const RunConfig& cfg, const InteractionDataset& train_view) {
    IndicatorOptions opts;
    opts.svd_dim = std::min({cfg.svd_dim, train_view.num_users(), train_view.num_items()});
    opts.dense_cap = cfg.dense_cap;
    return select_templates(train_view, cfg.indicator, cfg.user_frac, cfg.item_frac, opts);
}

}  // namespace

nlohmann::json cmd_prepare(const RunConfig& cfg, OutputDir& out, std::ostream& log) {
    const auto p = prepare(cfg);
    const auto& ds = p.dataset;
    const double density =
        static_cast<double>(ds.num_edges()) / (static_cast<double>(ds.num_users()) * static_cast<double>(ds.num_items()));
    log << "users " << ds.num_users() << " items " << ds.num_items() << " interactions " << ds.num_edges()
        << " density " << density << "\n";
    out.write_json("config.json", to_json(cfg));
    out.write("edges.tsv", edges_text(ds));
    out.write("train.tsv", edges_text(p.split.train));
    out.write("valid.tsv", edges_text(p.split.valid));
    out.write("test.tsv", edges_text(p.split.test));
    if (ds.user_keys()) out.write("user_keys.tsv", keys_text(ds.user_keys()));
    if (ds.item_keys()) out.write("item_keys.tsv", keys_text(ds.item_keys()));
    out.write_json("split.json", {{"seed", p.split.seed},
                                  {"ratios",
                                   {{"train", p.split.ratios.train},
                                    {"valid", p.split.ratios.valid},
                                    {"test", p.split.ratios.test}}},
                                  {"n_users", ds.num_users()},
                                  {"n_items", ds.num_items()},
                                  {"counts",
                                   {{"train", p.split.train.num_edges()},
                                    {"valid", p.split.valid.num_edges()},
                                    {"test", p.split.test.num_edges()}}}});
    out.write_json("stats.json", {{"raw_records", p.raw_records},
                                  {"users", ds.num_users()},
                                  {"items", ds.num_items()},
                                  {"interactions", ds.num_edges()},
                                  {"density", density}});
    return nlohmann::json::object();
}

nlohmann::json cmd_select_templates(const RunConfig& cfg, OutputDir& out, std::ostream& log) {
    const auto p = prepare(cfg);
    const auto scenario = build_scenario(cfg, p.split);
    const auto templates = templates_for(cfg, scenario.train_view);
    log << "indicator " << templates.indicator_name << ": " << templates.n_t() << " template users, "
        << templates.m_t() << " template items\n";
    out.write_json("config.json", to_json(cfg));
    out.write_json("templates.json", templates);
    return nlohmann::json::object();
}

nlohmann::json cmd_train(const RunConfig& cfg, OutputDir& out, std::ostream& log) {
    for (const auto& w : cfg.warnings()) log << "warning: " << w << "\n";
    const auto p = prepare(cfg);
    const auto scenario = build_scenario(cfg, p.split);
    const auto templates = templates_for(cfg, scenario.train_view);
    const DatasetSplit train_split{scenario.train_view, scenario.valid_view, scenario.test_targets, p.split.seed,
                                   p.split.ratios};
    log << "training " << to_string(cfg.train.backbone) << " on " << scenario.train_view.num_edges()
        << " interactions (" << to_string(cfg.scenario) << "), " << templates.n_t() << "/" << templates.m_t()
        << " templates\n";
    const auto result = train(train_split, templates, cfg.train, [&](const EpochRecord& r) {
        log << "epoch " << r.epoch << " loss " << r.train_loss << " val ndcg@" << cfg.train.eval_k << " "
            << format_percent(r.val.ndcg) << "\n";
    });
    log << "best epoch " << result.best_epoch << " val ndcg " << format_percent(result.best_val_ndcg) << " after "
        << result.epochs_run << " epochs\n";

    auto model = params_to_json(result.params, templates);
    model["backbone"] = to_string(cfg.train.backbone);
    model["layers"] = cfg.train.layers;
    model["alpha"] = cfg.train.alpha_final;
    std::string log_text;
    nlohmann::json elapsed = nlohmann::json::array();
    for (const auto& r : result.log) {
        log_text += to_log_json(r).dump() + "\n";
        elapsed.push_back({{"epoch", r.epoch}, {"elapsed", r.elapsed}});
    }
    out.write_json("config.json", to_json(cfg));
    out.write_json("templates.json", templates);
    out.write_json("model.json", model);
    out.write("train_log.jsonl", log_text);
    out.write_json("train_summary.json", {{"best_epoch", result.best_epoch},
                                          {"best_val_ndcg", result.best_val_ndcg},
                                          {"epochs_run", result.epochs_run},
                                          {"early_stopped", result.early_stopped},
                                          {"param_count", result.params.param_count()},
                                          {"warnings", cfg.warnings()}});
    return {{"epoch_elapsed", elapsed}};
}

nlohmann::json cmd_eval(const RunConfig& cfg, const std::filesystem::path& model_path, OutputDir& out,
                        std::ostream& log) {
    std::ifstream in(model_path);
    if (!in) throw DataError("cannot read model file '" + model_path.string() + "'");
    nlohmann::json model;
    try {
        in >> model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file '" + model_path.string() + "' is not valid JSON: " + e.what());
    }
    const auto [params, templates] = params_from_json(model);
    const BackboneKind backbone = model.contains("backbone") ? parse_backbone(model.at("backbone").get<std::string>())
                                                             : cfg.train.backbone;
    const int layers = model.contains("layers") ? model.at("layers").get<int>() : cfg.train.layers;
    const double alpha = model.contains("alpha") ? model.at("alpha").get<double>() : cfg.train.alpha_final;

    const auto p = prepare(cfg);
    if (templates.num_users() != p.dataset.num_users() || templates.num_items() != p.dataset.num_items())
        throw ConfigError("model was trained on a " + std::to_string(templates.num_users()) + "x" +
                          std::to_string(templates.num_items()) + " dataset, config yields " +
                          std::to_string(p.dataset.num_users()) + "x" + std::to_string(p.dataset.num_items()));
    const auto scenario = build_scenario(cfg, p.split);
    const auto f = model_forward(params, templates, scenario.test_observed, alpha, backbone, layers);
    EvalOptions opts;
    opts.k = cfg.eval_k;
    const auto report = evaluate(f.reps, scenario, opts);
    const auto popular = evaluate(popular_baseline(scenario.train_view), scenario, opts);
    log_metrics(log, "inmo", report);
    log_metrics(log, "popular", popular);

    std::ostringstream csv, pop_csv;
    write_report_csv(csv, report);
    write_report_csv(pop_csv, popular);
    out.write_json("config.json", to_json(cfg));
    out.write_json("eval_report.json", {{"model", report}, {"popular", popular}});
    out.write("eval_report.csv", csv.str());
    out.write("popular_report.csv", pop_csv.str());
    return {{"model_file", model_path.string()}};
}

nlohmann::json cmd_theory_check(const RunConfig& cfg, OutputDir& out, std::ostream& log) {
    check_dense_cap(cfg.theory_rows, cfg.theory_cols, cfg.dense_cap);
    const std::size_t d = std::min({cfg.theory_d, cfg.theory_rows, cfg.theory_cols});
    nlohmann::json t1 = nlohmann::json::array(), t2 = nlohmann::json::array(), faith = nlohmann::json::array();
    std::size_t t1_pass = 0, t2_pass = 0, t2_total = 0;
    std::string faith_csv;
    for (std::size_t s = 0; s < cfg.theory_instances; ++s) {
        const std::uint64_t seed = cfg.theory_seed + s;
        const Matrix y = random_binary(cfg.theory_rows, cfg.theory_cols, cfg.theory_density, seed);
        auto r1 = theorem1_check(y, d, cfg.dense_cap);
        r1.seed = seed;
        t1_pass += r1.pass;
        t1.push_back(r1);

        const auto ds = dataset_from_dense(y);
        const auto factors = truncated_svd(y, d, cfg.dense_cap);
        const auto scores = error_sort_exact(ds, factors, Side::User);
        for (double frac : {0.3, 0.5, 0.7}) {
            auto r2 = theorem2_check(y, d, top_fraction(scores, frac), cfg.dense_cap);
            r2.seed = seed;
            ++t2_total;
            t2_pass += r2.pass;
            nlohmann::json j = r2;
            j["template_frac"] = frac;
            t2.push_back(j);
        }

        const auto fr = indicator_faithfulness(y, d, cfg.dense_cap);
        faith.push_back({{"seed", seed},
                         {"spearman", fr.spearman ? nlohmann::json(*fr.spearman) : nlohmann::json(nullptr)},
                         {"degenerate", fr.degenerate}});
        if (s == 0) {
            std::ostringstream csv;
            write_faithfulness_csv(csv, fr);
            faith_csv = csv.str();
        }
    }
    const bool all_pass = t1_pass == cfg.theory_instances && t2_pass == t2_total;
    log << "theorem 1: " << t1_pass << "/" << cfg.theory_instances << " pass\n";
    log << "theorem 2 chain: " << t2_pass << "/" << t2_total << " pass\n";
    out.write_json("config.json", to_json(cfg));
    out.write_json("theorem1.json", {{"passed", t1_pass}, {"total", cfg.theory_instances}, {"reports", t1}});
    out.write_json("theorem2.json", {{"passed", t2_pass}, {"total", t2_total}, {"reports", t2}});
    out.write_json("faithfulness.json", faith);
    out.write("faithfulness.csv", faith_csv);
    return {{"all_pass", all_pass}};
}

nlohmann::json cmd_error_curve(const RunConfig& cfg, OutputDir& out, std::ostream& log) {
    const auto p = prepare(cfg);
    const auto& ds = p.dataset;
    check_dense_cap(ds.num_users(), ds.num_items(), cfg.dense_cap);
    if (cfg.curve_d > std::min(ds.num_users(), ds.num_items()))
        throw ConfigError("curve.d = " + std::to_string(cfg.curve_d) + " exceeds min(users, items) = " +
                          std::to_string(std::min(ds.num_users(), ds.num_items())));
    const auto factors = truncated_svd(ds.to_dense(), cfg.curve_d, cfg.dense_cap);
    IndicatorOptions opts;
    opts.svd_dim = cfg.curve_d;
    opts.dense_cap = cfg.dense_cap;
    std::ostringstream csv;
    bool header = true;
    for (auto ind : cfg.curve_indicators) {
        std::vector<double> su, si;
        if (ind == Indicator::ErrorSortExact) {
            su = error_sort_exact(ds, factors, Side::User);
            si = error_sort_exact(ds, factors, Side::Item);
        } else {
            su = indicator_scores(ds, ind, Side::User, opts);
            si = indicator_scores(ds, ind, Side::Item, opts);
        }
        const auto points = error_curve(ds, factors, su, si, cfg.curve_fractions);
        write_error_curve_csv(csv, points, to_string(ind), header);
        header = false;
        for (const auto& pt : points)
            if (std::abs(pt.fraction - 0.7) < 1e-12)
                log << to_string(ind) << " ratio at 70% non-template: user " << pt.user_ratio << " item "
                    << pt.item_ratio << "\n";
    }
    out.write_json("config.json", to_json(cfg));
    out.write("error_curve.csv", csv.str());
    return nlohmann::json::object();
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"INMO inductive recommendation toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir, model_path, scenario_name;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "key = value config file");
        sub->add_option("-s,--set", overrides, "override one key (key=value), repeatable");
        sub->add_option("-o,--out", out_dir, "output directory")->required();
    };
    CLI::App* prepare_cmd = app.add_subcommand("prepare", "load, preprocess and split a dataset");
    CLI::App* templates_cmd = app.add_subcommand("select-templates", "score and select template users/items");
    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
    CLI::App* theory_cmd = app.add_subcommand("theory-check", "run the closed-form and error-bound checks");
    CLI::App* curve_cmd = app.add_subcommand("error-curve", "additional-error curves per template indicator");
    for (auto* sub : {prepare_cmd, templates_cmd, train_cmd, eval_cmd, theory_cmd, curve_cmd}) add_common(sub);
    eval_cmd->add_option("-m,--model", model_path, "model.json written by train")->required();
    eval_cmd->add_option("--scenario", scenario_name, "transductive, new-interactions or new-users-items");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string command = chosen->get_name();
    try {
        RunConfig cfg;
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        for (const auto& o : overrides) apply_override(cfg, o);
        if (!scenario_name.empty()) cfg.set("scenario.kind", scenario_name);
        cfg.validate();

        OutputDir dir(out_dir);
        const std::string started = utc_now();
        nlohmann::json meta;
        if (command == "prepare") meta = cmd_prepare(cfg, dir, err);
        else if (command == "select-templates") meta = cmd_select_templates(cfg, dir, err);
        else if (command == "train") meta = cmd_train(cfg, dir, err);
        else if (command == "eval") meta = cmd_eval(cfg, model_path, dir, err);
        else if (command == "theory-check") meta = cmd_theory_check(cfg, dir, err);
        else meta = cmd_error_curve(cfg, dir, err);
        meta["started"] = started;
        meta["finished"] = utc_now();
        dir.finish(command, meta);
        out << "wrote " << dir.hashes().size() << " files to " << dir.root().string() << "\n";
        if (meta.contains("all_pass") && !meta.at("all_pass").get<bool>()) {
            err << "error: at least one theory check failed\n";
            return kExitFailure;
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SizeCapError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace inmo::cli
