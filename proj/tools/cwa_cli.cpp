#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cwa/io.hpp"
#include "cwa/verify.hpp"

namespace {

using cwa::json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

cwa::AttackConfig config_from_file_and_flags(const std::string& config_path, const json& overrides) {
    json base = json::object();
    if (!config_path.empty()) base = cwa::load_json_file(config_path);
    // flag > file > default
    for (auto it = overrides.begin(); it != overrides.end(); ++it) base[it.key()] = it.value();
    return cwa::attack_config_from_json(base);
}

void print_run_banner(const cwa::AttackConfig& cfg) {
    std::cout << "config_hash=" << cwa::config_hash(cfg) << " seed=" << cfg.seed << "\n";
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_path) {
    cwa::DatasetSpec spec = cwa::dataset_spec_from_json(cwa::load_json_file(spec_path));
    cwa::Dataset data = cwa::generate_dataset(spec);
    json j = cwa::dataset_to_json(data);
    j["spec"] = cwa::dataset_spec_to_json(spec);
    cwa::save_json_file(out_path, j);
    std::cout << "wrote " << data.xs.size() << " points to " << out_path
              << " seed=" << spec.seed << "\n";
    return kExitOk;
}

int cmd_train_zoo(const std::string& dataset_path, const std::string& spec_path,
                  const std::string& out_path) {
    cwa::Dataset data = cwa::dataset_from_json(cwa::load_json_file(dataset_path));
    json sj = cwa::load_json_file(spec_path);
    cwa::ZooSpec spec;
    for (const auto& mj : sj.at("members")) {
        cwa::ZooMemberSpec m;
        m.train.arch = mj.value("arch", "linear");
        m.train.hidden = mj.value("hidden", 16);
        m.train.act = cwa::activation_from_name(mj.value("activation", "tanh"));
        m.train.seed = mj.value("seed", 0ULL);
        m.train.epochs = mj.value("epochs", 50);
        m.train.lr = mj.value("lr", 0.5);
        m.train.batch_size = mj.value("batch_size", 32);
        spec.members.push_back(m);
    }
    spec.surrogates = sj.at("surrogates").get<std::vector<int>>();
    spec.holdouts = sj.at("holdouts").get<std::vector<int>>();
    cwa::Zoo zoo = cwa::train_zoo(spec, data);
    cwa::save_json_file(out_path, cwa::zoo_to_json(zoo));
    std::cout << "trained " << zoo.models.size() << " models ->" << " " << out_path << "\n";
    for (size_t i = 0; i < zoo.train_accuracy.size(); ++i) {
        std::cout << "  model " << i << " train acc " << zoo.train_accuracy[i] << "\n";
    }
    return kExitOk;
}

int cmd_attack(const std::string& zoo_path, const std::string& dataset_path,
               const std::string& algo, int index, const std::string& config_path,
               const json& overrides, const std::string& out_path) {
    cwa::Zoo zoo = cwa::zoo_from_json(cwa::load_json_file(zoo_path));
    cwa::Dataset data = cwa::dataset_from_json(cwa::load_json_file(dataset_path));
    if (index < 0 || index >= static_cast<int>(data.xs.size())) {
        std::cerr << "attack: index out of range\n";
        return kExitUsage;
    }
    cwa::AttackConfig cfg = config_from_file_and_flags(config_path, overrides);
    print_run_banner(cfg);
    cwa::Ensemble e(zoo.surrogate_models(), cfg.ensemble_mode);
    cwa::AttackTrace trace = cwa::attack_by_name(algo)(e, data.xs[index], data.ys[index], cfg);
    json j = cwa::trace_to_json(trace);
    j["index"] = index;
    cwa::save_json_file(out_path, j);
    std::cout << "attack " << algo << " nfe=" << trace.nfe
              << " final_loss=" << trace.ensemble_losses.back() << "\n";
    return kExitOk;
}

cwa::CampaignOptions campaign_options_from_json(const json& cj, int jobs) {
    cwa::CampaignOptions opts;
    if (cj.contains("attacks")) opts.attacks = cj.at("attacks").get<std::vector<std::string>>();
    opts.max_points = cj.value("max_points", opts.max_points);
    opts.cosine_sample = cj.value("cosine_sample", opts.cosine_sample);
    opts.flatness_sample = cj.value("flatness_sample", opts.flatness_sample);
    opts.jobs = jobs;
    return opts;
}

int cmd_campaign(const std::string& config_path, const std::string& out_path,
                 const std::string& csv_path, int jobs) {
    json cj = cwa::load_json_file(config_path);
    cwa::Dataset data = cwa::dataset_from_json(cwa::load_json_file(cj.at("dataset").get<std::string>()));
    cwa::Zoo zoo = cwa::zoo_from_json(cwa::load_json_file(cj.at("zoo").get<std::string>()));
    cwa::AttackConfig cfg = cwa::attack_config_from_json(cj.value("attack_config", json::object()));
    print_run_banner(cfg);
    cwa::CampaignReport report = cwa::run_campaign(data, zoo, cfg, campaign_options_from_json(cj, jobs));
    json rj = cwa::campaign_report_to_json(report);
    rj["attack_config"] = cwa::attack_config_to_json(cfg);
    cwa::save_json_file(out_path, rj);
    if (!csv_path.empty()) cwa::save_text_file(csv_path, cwa::campaign_report_to_csv(report));
    for (const auto& a : report.attacks) {
        std::cout << a.attack << ": surrogate " << a.mean_surrogate_rate << " holdout "
                  << a.mean_holdout_rate << " nfe " << a.nfe_per_example << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path,
              const std::string& csv_path, int jobs) {
    json cj = cwa::load_json_file(config_path);
    cwa::Dataset data = cwa::dataset_from_json(cwa::load_json_file(cj.at("dataset").get<std::string>()));
    cwa::Zoo zoo = cwa::zoo_from_json(cwa::load_json_file(cj.at("zoo").get<std::string>()));
    cwa::AttackConfig cfg = cwa::attack_config_from_json(cj.value("attack_config", json::object()));
    print_run_banner(cfg);
    std::string parameter = cj.at("parameter");
    std::vector<double> grid = cj.at("grid").get<std::vector<double>>();
    cwa::SweepReport report =
        cwa::sweep(parameter, grid, data, zoo, cfg, campaign_options_from_json(cj, jobs));
    json rj = cwa::sweep_report_to_json(report);
    rj["attack_config"] = cwa::attack_config_to_json(cfg);
    cwa::save_json_file(out_path, rj);
    if (!csv_path.empty()) cwa::save_text_file(csv_path, cwa::sweep_report_to_csv(report));
    std::cout << "sweep over " << parameter << ": " << report.points.size() << " points\n";
    return kExitOk;
}

int cmd_verify(const std::string& check, int trials, std::uint64_t seed,
               const std::string& out_path) {
    if (trials < 1) {
        std::cerr << "verify-theory: --trials must be >= 1\n";
        return kExitUsage;
    }
    std::vector<cwa::VerifyResult> results;
    try {
        results = cwa::run_verification(check, trials, seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << "verify-theory: " << e.what() << "\n";
        return kExitUsage;
    }
    json out = json::array();
    bool all_pass = true;
    for (const auto& r : results) {
        json j{{"check", r.check},
               {"instances", r.instances},
               {"pass_rate", r.pass_rate},
               {"worst_slack", r.worst_slack},
               {"seed", r.seed},
               {"worst_instance_seed", r.worst_instance_seed},
               {"pass", r.pass},
               {"detail", r.detail}};
        out.push_back(j);
        all_pass = all_pass && r.pass;
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.check << " pass_rate=" << r.pass_rate
                  << " worst_slack=" << r.worst_slack;
        if (!r.pass) std::cout << " worst_instance_seed=" << r.worst_instance_seed;
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << "\n";
    }
    if (!out_path.empty()) cwa::save_json_file(out_path, out);
    return all_pass ? kExitOk : kExitCheckFailed;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
    json j = cwa::load_json_file(in_path);
    std::string csv;
    if (j.contains("parameter")) {
        csv = cwa::sweep_report_to_csv(cwa::sweep_report_from_json(j));
    } else {
        csv = cwa::campaign_report_to_csv(cwa::campaign_report_from_json(j));
    }
    if (out_path.empty()) std::cout << csv;
    else cwa::save_text_file(out_path, csv);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Common-weakness ensemble attack lab"};
    app.require_subcommand(1);

    std::string spec_path, out_path, dataset_path, zoo_path, config_path, csv_path, in_path;
    std::string algo = "mi-cwa";
    std::string check = "all";
    int index = 0;
    int trials = 100;
    int jobs = 1;
    std::uint64_t seed = 0;
    json overrides = json::object();

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen->add_option("--spec", spec_path, "dataset spec JSON")->required();
    gen->add_option("--out", out_path, "output dataset JSON")->required();

    auto* train = app.add_subcommand("train-zoo", "train a model zoo on a dataset");
    train->add_option("--dataset", dataset_path)->required();
    train->add_option("--spec", spec_path, "zoo spec JSON")->required();
    train->add_option("--out", out_path)->required();

    auto* attack = app.add_subcommand("attack", "run one attack on one example");
    attack->add_option("--zoo", zoo_path)->required();
    attack->add_option("--dataset", dataset_path)->required();
    attack->add_option("--algo", algo, "fgsm|bim|mi|sam|mi-sam|cse|mi-cse|mi-cwa");
    attack->add_option("--index", index, "test point index");
    attack->add_option("--config", config_path, "attack config JSON");
    attack->add_option("--out", out_path)->required();
    double flag_eps = -1.0, flag_alpha = -1.0, flag_beta = -1.0, flag_r = -1.0;
    int flag_t = -1;
    attack->add_option("--eps", flag_eps);
    attack->add_option("--T", flag_t);
    attack->add_option("--alpha", flag_alpha);
    attack->add_option("--beta", flag_beta);
    attack->add_option("--r", flag_r);
    attack->add_option("--seed", seed);

    auto* campaign = app.add_subcommand("campaign", "attack + evaluate a full test set");
    campaign->add_option("--config", config_path)->required();
    campaign->add_option("--out", out_path)->required();
    campaign->add_option("--csv", csv_path);
    campaign->add_option("--jobs", jobs, "worker threads across test points");

    auto* sweep_cmd = app.add_subcommand("sweep", "campaign per grid point of one parameter");
    sweep_cmd->add_option("--config", config_path)->required();
    sweep_cmd->add_option("--out", out_path)->required();
    sweep_cmd->add_option("--csv", csv_path);
    sweep_cmd->add_option("--jobs", jobs);

    auto* verify = app.add_subcommand("verify-theory", "numerical checks of the stated bounds");
    verify->add_option("--check", check,
                       "holder|dot-product|cosine-trend|gaussian-optima|projection|nfe|all");
    verify->add_option("--trials", trials);
    verify->add_option("--seed", seed);
    verify->add_option("--out", out_path);

    auto* report = app.add_subcommand("report", "render a JSON report to CSV");
    report->add_option("--in", in_path)->required();
    report->add_option("--out", out_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(spec_path, out_path);
        if (train->parsed()) return cmd_train_zoo(dataset_path, spec_path, out_path);
        if (attack->parsed()) {
            if (flag_eps >= 0.0) overrides["eps"] = flag_eps;
            if (flag_t >= 0) overrides["T"] = flag_t;
            if (flag_alpha >= 0.0) overrides["alpha"] = flag_alpha;
            if (flag_beta >= 0.0) overrides["beta"] = flag_beta;
            if (flag_r >= 0.0) overrides["r"] = flag_r;
            if (attack->count("--seed") > 0) overrides["seed"] = seed;
            return cmd_attack(zoo_path, dataset_path, algo, index, config_path, overrides, out_path);
        }
        if (campaign->parsed()) return cmd_campaign(config_path, out_path, csv_path, jobs);
        if (sweep_cmd->parsed()) return cmd_sweep(config_path, out_path, csv_path, jobs);
        if (verify->parsed()) return cmd_verify(check, trials, seed, out_path);
        if (report->parsed()) return cmd_report(in_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return kExitUsage;
}
