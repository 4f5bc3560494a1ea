#include "cwa/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cwa {

json model_to_json(const Classifier& model) {
    json j;
    j["arch"] = model.arch();
    j["dim"] = model.dim();
    j["K"] = model.num_classes();
    if (const auto* lin = dynamic_cast<const LinearSoftmax*>(&model)) {
        j["params"] = {{"W", lin->weights()}, {"b", lin->biases()}};
    } else if (const auto* mlp = dynamic_cast<const Mlp*>(&model)) {
        j["hidden"] = mlp->hidden();
        j["activation"] = activation_name(mlp->activation());
        j["params"] = {{"flat", mlp->params()}};
    } else if (const auto* q = dynamic_cast<const QuadraticModel*>(&model)) {
        j["params"] = {{"p", q->optimum()}, {"H", q->hessian().a}, {"c", q->optimum_loss()}};
    } else {
        throw std::invalid_argument("model_to_json: unknown model type");
    }
    return j;
}

ClassifierPtr model_from_json(const json& j) {
    std::string arch = j.at("arch");
    int dim = j.at("dim");
    int k = j.at("K");
    if (arch == "linear") {
        auto m = std::make_shared<LinearSoftmax>(dim, k);
        m->weights() = j.at("params").at("W").get<std::vector<double>>();
        m->biases() = j.at("params").at("b").get<std::vector<double>>();
        if (static_cast<int>(m->weights().size()) != k * dim) {
            throw std::invalid_argument("model_from_json: bad linear weight size");
        }
        return m;
    }
    if (arch == "mlp") {
        auto m = std::make_shared<Mlp>(dim, j.at("hidden"), k,
                                       activation_from_name(j.at("activation")));
        auto flat = j.at("params").at("flat").get<std::vector<double>>();
        if (flat.size() != m->params().size()) {
            throw std::invalid_argument("model_from_json: bad mlp parameter size");
        }
        m->params() = flat;
        return m;
    }
    if (arch == "quadratic") {
        Vec p = j.at("params").at("p").get<Vec>();
        Matrix h(dim);
        h.a = j.at("params").at("H").get<std::vector<double>>();
        if (h.a.size() != static_cast<size_t>(dim) * dim) {
            throw std::invalid_argument("model_from_json: bad quadratic H size");
        }
        return std::make_shared<QuadraticModel>(std::move(p), std::move(h),
                                                j.at("params").at("c").get<double>());
    }
    throw std::invalid_argument("model_from_json: unknown arch " + arch);
}

json zoo_to_json(const Zoo& zoo) {
    json j;
    j["models"] = json::array();
    for (const auto& m : zoo.models) j["models"].push_back(model_to_json(*m));
    j["surrogates"] = zoo.surrogates;
    j["holdouts"] = zoo.holdouts;
    j["train_accuracy"] = zoo.train_accuracy;
    return j;
}

Zoo zoo_from_json(const json& j) {
    Zoo zoo;
    for (const auto& mj : j.at("models")) zoo.models.push_back(model_from_json(mj));
    zoo.surrogates = j.at("surrogates").get<std::vector<int>>();
    zoo.holdouts = j.at("holdouts").get<std::vector<int>>();
    if (j.contains("train_accuracy")) {
        zoo.train_accuracy = j.at("train_accuracy").get<std::vector<double>>();
    }
    return zoo;
}

json dataset_to_json(const Dataset& data) {
    return json{{"dim", data.dim}, {"K", data.k}, {"xs", data.xs}, {"ys", data.ys}};
}

Dataset dataset_from_json(const json& j) {
    Dataset d;
    d.dim = j.at("dim");
    d.k = j.at("K");
    d.xs = j.at("xs").get<std::vector<Vec>>();
    d.ys = j.at("ys").get<std::vector<int>>();
    return d;
}

json dataset_spec_to_json(const DatasetSpec& spec) {
    return json{{"generator", spec.generator}, {"dim", spec.dim},     {"K", spec.k},
                {"per_class", spec.per_class}, {"noise", spec.noise}, {"seed", spec.seed}};
}

DatasetSpec dataset_spec_from_json(const json& j) {
    DatasetSpec spec;
    spec.generator = j.value("generator", spec.generator);
    spec.dim = j.value("dim", spec.dim);
    spec.k = j.value("K", spec.k);
    spec.per_class = j.value("per_class", spec.per_class);
    spec.noise = j.value("noise", spec.noise);
    spec.seed = j.value("seed", spec.seed);
    return spec;
}

json attack_config_to_json(const AttackConfig& cfg) {
    return json{{"eps", cfg.budget.eps},
                {"box_lo", cfg.budget.box_lo},
                {"box_hi", cfg.budget.box_hi},
                {"T", cfg.T},
                {"mu", cfg.mu},
                {"alpha", cfg.alpha},
                {"beta", cfg.beta},
                {"r", cfg.r},
                {"ensemble_mode", ensemble_mode_name(cfg.ensemble_mode)},
                {"seed", cfg.seed},
                {"norm_floor", cfg.norm_floor},
                {"rescale_beta", cfg.rescale_beta},
                {"reset_inner_momentum", cfg.reset_inner_momentum}};
}

AttackConfig attack_config_from_json(const json& j) {
    AttackConfig cfg;
    cfg.budget.eps = j.value("eps", cfg.budget.eps);
    cfg.budget.box_lo = j.value("box_lo", cfg.budget.box_lo);
    cfg.budget.box_hi = j.value("box_hi", cfg.budget.box_hi);
    cfg.T = j.value("T", cfg.T);
    cfg.mu = j.value("mu", cfg.mu);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.r = j.value("r", cfg.r);
    if (j.contains("ensemble_mode")) {
        cfg.ensemble_mode = ensemble_mode_from_name(j.at("ensemble_mode"));
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.norm_floor = j.value("norm_floor", cfg.norm_floor);
    cfg.rescale_beta = j.value("rescale_beta", cfg.rescale_beta);
    cfg.reset_inner_momentum = j.value("reset_inner_momentum", cfg.reset_inner_momentum);
    return cfg;
}

json trace_to_json(const AttackTrace& trace, size_t iterate_size_limit) {
    json j;
    j["attack"] = trace.attack;
    j["config"] = attack_config_to_json(trace.config);
    j["nfe"] = trace.nfe;
    j["ensemble_losses"] = trace.ensemble_losses;
    j["member_losses"] = trace.member_losses;
    size_t total = trace.iterates.size() * (trace.iterates.empty() ? 0 : trace.iterates[0].size());
    if (total <= iterate_size_limit) {
        j["iterates"] = trace.iterates;
    } else {
        j["iterates_omitted"] = true;
        j["final_x"] = trace.final_x();
    }
    return j;
}

namespace {

json attack_report_to_json(const AttackReport& a) {
    return json{{"attack", a.attack},
                {"surrogate_rates", a.surrogate_rates},
                {"holdout_rates", a.holdout_rates},
                {"mean_surrogate_rate", a.mean_surrogate_rate},
                {"mean_holdout_rate", a.mean_holdout_rate},
                {"cosine_initial", a.cosine_initial},
                {"cosine_final", a.cosine_final},
                {"flatness", a.flatness},
                {"nfe_per_example", a.nfe_per_example},
                {"wall_seconds", a.wall_seconds}};
}

AttackReport attack_report_from_json(const json& j) {
    AttackReport a;
    a.attack = j.at("attack");
    a.surrogate_rates = j.at("surrogate_rates").get<std::vector<double>>();
    a.holdout_rates = j.at("holdout_rates").get<std::vector<double>>();
    a.mean_surrogate_rate = j.at("mean_surrogate_rate");
    a.mean_holdout_rate = j.at("mean_holdout_rate");
    a.cosine_initial = j.at("cosine_initial");
    a.cosine_final = j.at("cosine_final");
    a.flatness = j.at("flatness");
    a.nfe_per_example = j.at("nfe_per_example");
    a.wall_seconds = j.at("wall_seconds");
    return a;
}

}  // namespace

json campaign_report_to_json(const CampaignReport& report) {
    json j;
    j["config_hash"] = report.config_hash;
    j["seed"] = report.seed;
    j["n_points"] = report.n_points;
    j["dim"] = report.dim;
    j["K"] = report.k;
    j["attacks"] = json::array();
    for (const auto& a : report.attacks) j["attacks"].push_back(attack_report_to_json(a));
    return j;
}

CampaignReport campaign_report_from_json(const json& j) {
    CampaignReport r;
    r.config_hash = j.at("config_hash");
    r.seed = j.at("seed");
    r.n_points = j.at("n_points");
    r.dim = j.at("dim");
    r.k = j.at("K");
    for (const auto& aj : j.at("attacks")) r.attacks.push_back(attack_report_from_json(aj));
    return r;
}

json sweep_report_to_json(const SweepReport& report) {
    json j;
    j["parameter"] = report.parameter;
    j["points"] = json::array();
    for (const auto& p : report.points) {
        j["points"].push_back({{"value", p.value}, {"report", campaign_report_to_json(p.report)}});
    }
    return j;
}

SweepReport sweep_report_from_json(const json& j) {
    SweepReport r;
    r.parameter = j.at("parameter");
    for (const auto& pj : j.at("points")) {
        r.points.push_back({pj.at("value"), campaign_report_from_json(pj.at("report"))});
    }
    return r;
}

std::string campaign_report_to_csv(const CampaignReport& report) {
    std::ostringstream os;
    os << "attack,model,split,rate,nfe,cosine_initial,cosine_final,flatness\n";
    for (const auto& a : report.attacks) {
        for (size_t i = 0; i < a.surrogate_rates.size(); ++i) {
            os << a.attack << ",surrogate" << i << ",surrogate," << a.surrogate_rates[i] << ","
               << a.nfe_per_example << "," << a.cosine_initial << "," << a.cosine_final << ","
               << a.flatness << "\n";
        }
        for (size_t i = 0; i < a.holdout_rates.size(); ++i) {
            os << a.attack << ",holdout" << i << ",holdout," << a.holdout_rates[i] << ","
               << a.nfe_per_example << "," << a.cosine_initial << "," << a.cosine_final << ","
               << a.flatness << "\n";
        }
    }
    return os.str();
}

std::string sweep_report_to_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "parameter,value,attack,mean_surrogate_rate,mean_holdout_rate,nfe\n";
    for (const auto& p : report.points) {
        for (const auto& a : p.report.attacks) {
            os << report.parameter << "," << p.value << "," << a.attack << ","
               << a.mean_surrogate_rate << "," << a.mean_holdout_rate << "," << a.nfe_per_example
               << "\n";
        }
    }
    return os.str();
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("parse error in " + path + ": " + e.what());
    }
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

void save_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace cwa
