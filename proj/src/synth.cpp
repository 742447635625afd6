#include "acqsens/synth.hpp"

#include "acqsens/config.hpp"
#include "acqsens/distributions.hpp"
#include "acqsens/errors.hpp"
#include "acqsens/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace acqsens {

double Rng::next_normal() {
    // (0,1) strictly, 53-bit resolution centered on the cell midpoint
    double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    return dist::normal_quantile(u);
}

int Rng::categorical(const double* weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i];
    double x = next_double() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += weights[i];
        if (x < acc) return i;
    }
    return n - 1;
}

void SimSpec::validate() const {
    if (space.dim() == 0) fail(ErrorCode::InvalidSpec, "empty parameter space");
    if (n_cases <= 0) fail(ErrorCode::InvalidSpec, "n_cases must be positive");
    if (methods.empty()) fail(ErrorCode::InvalidSpec, "at least one method required");
    std::set<std::string> names;
    for (const auto& m : methods) {
        if (m.name.empty()) fail(ErrorCode::InvalidSpec, "method with empty name");
        if (!names.insert(m.name).second)
            fail(ErrorCode::InvalidSpec, "duplicate method name '" + m.name + "'");
    }
    if (methods.front().beta2 != 0.0 || methods.front().beta3 != 0.0)
        fail(ErrorCode::InvalidSpec, "the first (reference) method must have beta2 = beta3 = 0");
    if (sigma_case < 0.0 || sigma_method < 0.0)
        fail(ErrorCode::InvalidSpec, "sigma_case and sigma_method must be >= 0");
    if (true_region.thresholds.size() != space.dim())
        fail(ErrorCode::DimensionMismatch, "true_region dimension mismatch");
    if (!samplers.empty() && samplers.size() != space.dim())
        fail(ErrorCode::InvalidSpec, "samplers must be empty or one per axis");
    for (std::size_t j = 0; j < samplers.size(); ++j) {
        const auto& s = samplers[j];
        if (s.kind == AxisSampler::Kind::Categorical) {
            if (s.values.empty() || s.values.size() != s.weights.size())
                fail(ErrorCode::InvalidSpec, "categorical sampler needs matching values/weights");
            for (double w : s.weights)
                if (!(w >= 0.0)) fail(ErrorCode::InvalidSpec, "negative sampler weight");
            for (double v : s.values)
                if (v < space.axis(j).min || v > space.axis(j).max)
                    fail(ErrorCode::InvalidSpec, "categorical value outside the axis range");
        }
    }
    if (!(label_prevalence > 0.0 && label_prevalence < 1.0))
        fail(ErrorCode::InvalidSpec, "label_prevalence must lie in (0,1)");
    if (folds < 1) fail(ErrorCode::InvalidSpec, "folds must be >= 1");
    if (score_noise_sd < 0.0) fail(ErrorCode::InvalidSpec, "score_noise_sd must be >= 0");
    if (!std::isfinite(beta0) || !std::isfinite(beta1))
        fail(ErrorCode::InvalidSpec, "non-finite coefficients");
}

namespace {

std::string case_id_for(int index, int n_cases) {
    int width = 1;
    for (int v = n_cases - 1; v >= 10; v /= 10) ++width;
    std::string digits = std::to_string(index);
    return "C" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

} // namespace

SimResult generate(const SimSpec& spec) {
    spec.validate();
    Rng root(spec.seed);
    Rng param_stream = root.split("params");
    Rng case_stream = root.split("case_effects");
    Rng method_stream = root.split("method_effects");
    Rng label_stream = root.split("labels");
    Rng failure_stream = root.split("failures");
    Rng score_stream = root.split("scores");

    const std::size_t np = spec.space.dim();
    const int n_methods = static_cast<int>(spec.methods.size());

    std::vector<double> method_intercept(n_methods, 0.0);
    for (int m = 0; m < n_methods; ++m)
        method_intercept[m] =
            spec.sigma_method * method_stream.split(static_cast<std::uint64_t>(m)).next_normal();

    std::vector<PredictionRecord> records;
    records.reserve(static_cast<std::size_t>(spec.n_cases) * n_methods);

    for (int c = 0; c < spec.n_cases; ++c) {
        Rng prng = param_stream.split(static_cast<std::uint64_t>(c));
        std::vector<double> params(np);
        for (std::size_t j = 0; j < np; ++j) {
            const Axis& axis = spec.space.axis(j);
            if (spec.samplers.empty() || spec.samplers[j].kind == AxisSampler::Kind::Uniform) {
                params[j] = prng.uniform(axis.min, axis.max);
            } else {
                const auto& s = spec.samplers[j];
                params[j] = s.values[static_cast<std::size_t>(
                    prng.categorical(s.weights.data(), static_cast<int>(s.values.size())))];
            }
        }

        double covariate = spec.mode == SimMode::QualityFactor
                               ? static_cast<double>(label_quality(params, spec.true_region,
                                                                   spec.space) == QualityLabel::LQ)
                               : signed_distance(params, spec.true_region, spec.space);
        double case_intercept =
            spec.sigma_case * case_stream.split(static_cast<std::uint64_t>(c)).next_normal();
        int label =
            label_stream.split(static_cast<std::uint64_t>(c)).bernoulli(spec.label_prevalence)
                ? 1
                : 0;
        std::string case_id = case_id_for(c, spec.n_cases);
        int fold = c % spec.folds;

        for (int m = 0; m < n_methods; ++m) {
            const MethodEffect& me = spec.methods[m];
            double eta = spec.beta0 + spec.beta1 * covariate + me.beta2 + me.beta3 * covariate +
                         case_intercept + method_intercept[m];
            double p_fail = 1.0 / (1.0 + std::exp(-eta));
            Rng frng = failure_stream.split(static_cast<std::uint64_t>(c))
                           .split(static_cast<std::uint64_t>(m));
            int f = frng.bernoulli(p_fail) ? 1 : 0;
            int predicted = f ? 1 - label : label;

            double score;
            if (spec.score_mode == ScoreMode::Indicator) {
                score = predicted ? 0.75 : 0.25;
            } else {
                Rng srng = score_stream.split(static_cast<std::uint64_t>(c))
                               .split(static_cast<std::uint64_t>(m));
                score = std::clamp(0.25 + 0.5 * predicted + spec.score_noise_sd * srng.next_normal(),
                                   0.001, 0.999);
            }

            PredictionRecord r;
            r.case_id = case_id;
            r.method = me.name;
            r.fold = fold;
            r.label = label;
            r.score = score;
            r.params = params;
            records.push_back(std::move(r));
        }
    }

    SimResult result{PredictionTable::from_records(std::move(records), spec.space, 0.5,
                                                   OutOfRangePolicy::Strict),
                     ""};

    nlohmann::ordered_json truth;
    truth["schema_version"] = 1;
    truth["seed"] = spec.seed;
    truth["mode"] = spec.mode == SimMode::QualityFactor ? "quality" : "distance";
    truth["beta0"] = spec.beta0;
    truth["beta1"] = spec.beta1;
    truth["sigma_case"] = spec.sigma_case;
    truth["sigma_method"] = spec.sigma_method;
    auto methods = nlohmann::ordered_json::array();
    for (const auto& m : spec.methods) {
        nlohmann::ordered_json jm;
        jm["name"] = m.name;
        jm["beta2"] = m.beta2;
        jm["beta3"] = m.beta3;
        methods.push_back(std::move(jm));
    }
    truth["methods"] = std::move(methods);
    truth["true_region"] = region_to_json(spec.true_region, spec.space);
    truth["space"] = space_to_json(spec.space);
    truth["n_cases"] = spec.n_cases;
    truth["folds"] = spec.folds;
    truth["label_prevalence"] = spec.label_prevalence;
    truth["score_mode"] = spec.score_mode == ScoreMode::Indicator ? "indicator" : "noisy";
    result.ground_truth_json = truth.dump(2) + "\n";
    return result;
}

SimSpec simspec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::InvalidSpec, std::string("invalid simulation spec JSON: ") + e.what());
    }
    SimSpec spec;
    try {
        spec.space = space_from_json(j.at("space"));
        spec.true_region = region_from_json(j.at("true_region"), spec.space);
        spec.n_cases = j.at("n_cases").get<int>();
        for (const auto& jm : j.at("methods")) {
            MethodEffect m;
            m.name = jm.at("name").get<std::string>();
            m.beta2 = jm.value("beta2", 0.0);
            m.beta3 = jm.value("beta3", 0.0);
            spec.methods.push_back(std::move(m));
        }
        spec.beta0 = j.at("beta0").get<double>();
        spec.beta1 = j.at("beta1").get<double>();
        spec.sigma_case = j.value("sigma_case", 0.0);
        spec.sigma_method = j.value("sigma_method", 0.0);
        std::string mode = j.value("mode", "quality");
        if (mode == "quality")
            spec.mode = SimMode::QualityFactor;
        else if (mode == "distance")
            spec.mode = SimMode::DistanceCovariate;
        else
            fail(ErrorCode::InvalidSpec, "mode must be 'quality' or 'distance'");
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.folds = j.value("folds", 10);
        spec.label_prevalence = j.value("label_prevalence", 0.5);
        std::string sm = j.value("score_mode", "indicator");
        if (sm == "indicator")
            spec.score_mode = ScoreMode::Indicator;
        else if (sm == "noisy")
            spec.score_mode = ScoreMode::Noisy;
        else
            fail(ErrorCode::InvalidSpec, "score_mode must be 'indicator' or 'noisy'");
        spec.score_noise_sd = j.value("score_noise_sd", 0.15);
        if (j.contains("samplers")) {
            for (std::size_t k = 0; k < j["samplers"].size(); ++k) {
                const auto& js = j["samplers"][k];
                AxisSampler s;
                std::string type = js.value("type", "uniform");
                if (type == "uniform") {
                    s.kind = AxisSampler::Kind::Uniform;
                } else if (type == "categorical") {
                    s.kind = AxisSampler::Kind::Categorical;
                    s.values = js.at("values").get<std::vector<double>>();
                    s.weights = js.at("weights").get<std::vector<double>>();
                } else {
                    fail(ErrorCode::InvalidSpec, "sampler type must be 'uniform' or 'categorical'");
                }
                spec.samplers.push_back(std::move(s));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidSpec, std::string("simulation spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string simspec_to_json(const SimSpec& spec) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["seed"] = spec.seed;
    j["mode"] = spec.mode == SimMode::QualityFactor ? "quality" : "distance";
    j["n_cases"] = spec.n_cases;
    j["beta0"] = spec.beta0;
    j["beta1"] = spec.beta1;
    j["sigma_case"] = spec.sigma_case;
    j["sigma_method"] = spec.sigma_method;
    auto methods = nlohmann::ordered_json::array();
    for (const auto& m : spec.methods) {
        nlohmann::ordered_json jm;
        jm["name"] = m.name;
        jm["beta2"] = m.beta2;
        jm["beta3"] = m.beta3;
        methods.push_back(std::move(jm));
    }
    j["methods"] = std::move(methods);
    j["space"] = space_to_json(spec.space);
    j["true_region"] = spec.true_region.thresholds;
    if (!spec.samplers.empty()) {
        auto samplers = nlohmann::ordered_json::array();
        for (const auto& s : spec.samplers) {
            nlohmann::ordered_json js;
            if (s.kind == AxisSampler::Kind::Uniform) {
                js["type"] = "uniform";
            } else {
                js["type"] = "categorical";
                js["values"] = s.values;
                js["weights"] = s.weights;
            }
            samplers.push_back(std::move(js));
        }
        j["samplers"] = std::move(samplers);
    }
    j["folds"] = spec.folds;
    j["label_prevalence"] = spec.label_prevalence;
    j["score_mode"] = spec.score_mode == ScoreMode::Indicator ? "indicator" : "noisy";
    j["score_noise_sd"] = spec.score_noise_sd;
    return j.dump(2) + "\n";
}

} // namespace acqsens
