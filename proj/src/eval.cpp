#include "fairkg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "fairkg/error.hpp"
#include "fairkg/text.hpp"

namespace fairkg::eval {

namespace {

constexpr Dimension kAllDimensions[] = {Dimension::InformationRetrieval, Dimension::AnswerStability,
                                        Dimension::FactualAccuracy, Dimension::ComparisonCapability};

} // namespace

std::string_view to_string(Dimension d) {
    switch (d) {
    case Dimension::InformationRetrieval: return "InformationRetrieval";
    case Dimension::AnswerStability: return "AnswerStability";
    case Dimension::FactualAccuracy: return "FactualAccuracy";
    case Dimension::ComparisonCapability: return "ComparisonCapability";
    }
    return "?";
}

Dimension dimension_from_string(std::string_view s) {
    std::string k;
    for (char c : s)
        if (c != ' ' && c != '_' && c != '-') k.push_back(c);
    k = text::to_lower(k);
    if (k == "informationretrieval" || k == "ir") return Dimension::InformationRetrieval;
    if (k == "answerstability" || k == "as") return Dimension::AnswerStability;
    if (k == "factualaccuracy" || k == "fa") return Dimension::FactualAccuracy;
    if (k == "comparisoncapability" || k == "cc") return Dimension::ComparisonCapability;
    throw Error(ErrorCode::InvalidArgument, "unknown dimension: " + std::string(s), {std::string(s)});
}

// ---- ratings --------------------------------------------------------------------

void RatingTable::add(Rating r) {
    if (!std::isfinite(r.score) || r.score < 0.0 || r.score > 5.0) {
        std::ostringstream msg;
        msg << "score " << r.score << " outside [0, 5]";
        throw Error(ErrorCode::ScoreOutOfRange, msg.str(), {r.rater_id, r.prompt_id, std::string(to_string(r.dimension))});
    }
    auto key = std::make_tuple(r.rater_id, r.prompt_id, r.dimension);
    if (cells_.count(key))
        throw Error(ErrorCode::DuplicateCell,
                    "duplicate rating for (" + r.rater_id + ", " + r.prompt_id + ", " +
                        std::string(to_string(r.dimension)) + ")",
                    {r.rater_id, r.prompt_id, std::string(to_string(r.dimension))});
    cells_.emplace(std::move(key), rows_.size());
    rows_.push_back(std::move(r));
}

std::vector<std::string> RatingTable::raters() const {
    std::vector<std::string> out;
    for (const auto& r : rows_) out.push_back(r.rater_id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::string> RatingTable::prompts(Dimension d) const {
    std::vector<std::string> out;
    for (const auto& r : rows_)
        if (r.dimension == d) out.push_back(r.prompt_id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Dimension> RatingTable::dimensions() const {
    std::vector<Dimension> out;
    for (Dimension d : kAllDimensions)
        if (std::any_of(rows_.begin(), rows_.end(), [&](const Rating& r) { return r.dimension == d; }))
            out.push_back(d);
    return out;
}

std::vector<Rating> RatingTable::rows_for(Dimension d) const {
    std::vector<Rating> out;
    for (const auto& r : rows_)
        if (r.dimension == d) out.push_back(r);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) throw Error(ErrorCode::MalformedRow, "unterminated quote on line " + std::to_string(line_no));
    for (auto& f : fields) f = text::trim(f);
    return fields;
}

} // namespace

RatingTable load_ratings(std::string_view csv) {
    const auto lines = text::split_lines(csv);
    std::size_t i = 0;
    while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
    if (i == lines.size()) throw Error(ErrorCode::MalformedRow, "ratings file is empty");
    std::string header = text::trim(lines[i]);
    if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
    if (split_csv_line(header, i + 1) != std::vector<std::string>{"rater_id", "prompt_id", "dimension", "score"})
        throw Error(ErrorCode::MalformedRow, "expected header rater_id,prompt_id,dimension,score", {header});
    RatingTable table;
    for (++i; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const std::string where = "line " + std::to_string(i + 1);
        auto f = split_csv_line(lines[i], i + 1);
        if (f.size() != 4) throw Error(ErrorCode::MalformedRow, where + ": expected 4 fields", {lines[i]});
        if (f[0].empty() || f[1].empty()) throw Error(ErrorCode::MalformedRow, where + ": empty id", {lines[i]});
        Dimension d;
        try {
            d = dimension_from_string(f[2]);
        } catch (const Error&) {
            throw Error(ErrorCode::MalformedRow, where + ": unknown dimension " + f[2], {lines[i]});
        }
        char* end = nullptr;
        const double score = std::strtod(f[3].c_str(), &end);
        if (f[3].empty() || end != f[3].c_str() + f[3].size() || std::isnan(score))
            throw Error(ErrorCode::MalformedRow, where + ": score is not a number", {lines[i]});
        table.add({f[0], f[1], d, score});
    }
    return table;
}

RatingTable load_ratings_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path, {path});
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_ratings(ss.str());
}

// ---- diagnostics ----------------------------------------------------------------

double quantile(std::vector<double> values, double p) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

double effective_sample_size(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 4) return static_cast<double>(n);
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    auto autocov = [&](std::size_t lag) {
        double s = 0;
        for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - m) * (x[t + lag] - m);
        return s / n;
    };
    const double c0 = autocov(0);
    if (!(c0 > 1e-300)) return static_cast<double>(n);
    // Geyer initial monotone positive sequence.
    double sum = 0;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < n; k += 2) {
        double pair = (autocov(k) + autocov(k + 1)) / c0;
        if (pair <= 0) break;
        pair = std::min(pair, prev);
        prev = pair;
        sum += pair;
    }
    double tau = -1.0 + 2.0 * sum;
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
    return n / tau;
}

double split_rhat(const std::vector<double>& x) {
    const std::size_t half = x.size() / 2;
    if (half < 2) return std::nan("");
    double means[2], vars[2];
    for (int c = 0; c < 2; ++c) {
        const auto b = x.begin() + c * half;
        means[c] = std::accumulate(b, b + half, 0.0) / half;
        double ss = 0;
        for (auto it = b; it != b + half; ++it) ss += (*it - means[c]) * (*it - means[c]);
        vars[c] = ss / (half - 1);
    }
    const double w = (vars[0] + vars[1]) / 2;
    const double grand = (means[0] + means[1]) / 2;
    const double b_over_n = (means[0] - grand) * (means[0] - grand) + (means[1] - grand) * (means[1] - grand);
    if (!(w > 1e-300)) return b_over_n > 1e-300 ? std::numeric_limits<double>::infinity() : 1.0;
    const double var_plus = (half - 1.0) / half * w + b_over_n;
    return std::sqrt(var_plus / w);
}

// ---- sampler ----------------------------------------------------------------------

namespace {

struct Design {
    std::vector<std::string> raters;
    std::vector<Dimension> dims;
    std::vector<std::pair<std::size_t, std::string>> thetas; // (dim index, prompt)
    std::vector<double> y;
    std::vector<std::size_t> rater_of, theta_of, dim_of;
    std::vector<std::vector<std::size_t>> rows_of_rater, rows_of_theta, rows_of_dim, thetas_of_dim;
};

Design build_design(const RatingTable& table) {
    Design d;
    d.raters = table.raters();
    d.dims = table.dimensions();
    std::map<std::pair<std::size_t, std::string>, std::size_t> theta_index;
    for (std::size_t di = 0; di < d.dims.size(); ++di)
        for (const auto& p : table.prompts(d.dims[di])) {
            theta_index[{di, p}] = d.thetas.size();
            d.thetas.push_back({di, p});
        }
    d.rows_of_rater.resize(d.raters.size());
    d.rows_of_theta.resize(d.thetas.size());
    d.rows_of_dim.resize(d.dims.size());
    d.thetas_of_dim.resize(d.dims.size());
    for (std::size_t k = 0; k < d.thetas.size(); ++k) d.thetas_of_dim[d.thetas[k].first].push_back(k);
    for (const auto& r : table.rows()) {
        const std::size_t row = d.y.size();
        const auto ri = static_cast<std::size_t>(
            std::lower_bound(d.raters.begin(), d.raters.end(), r.rater_id) - d.raters.begin());
        const auto di = static_cast<std::size_t>(std::find(d.dims.begin(), d.dims.end(), r.dimension) - d.dims.begin());
        const std::size_t ti = theta_index.at({di, r.prompt_id});
        d.y.push_back(r.score);
        d.rater_of.push_back(ri);
        d.theta_of.push_back(ti);
        d.dim_of.push_back(di);
        d.rows_of_rater[ri].push_back(row);
        d.rows_of_theta[ti].push_back(row);
        d.rows_of_dim[di].push_back(row);
    }
    return d;
}

struct State {
    double mu = 0;
    std::vector<double> alpha, theta, gamma;
    double sigma2 = 1;
};

class Sampler {
public:
    Sampler(const Design& d, const Hyperparams& h, std::uint64_t seed) : d_(d), h_(h), rng_(seed) {
        s_.alpha.assign(d.raters.size(), 0.0);
        s_.theta.assign(d.thetas.size(), 0.0);
        s_.gamma.assign(d.dims.size(), 0.0);
        s_.mu = std::accumulate(d.y.begin(), d.y.end(), 0.0) / d.y.size();
        s_.sigma2 = 1.0;
    }

    void sweep() {
        update_mu();
        for (std::size_t i = 0; i < s_.alpha.size(); ++i) s_.alpha[i] = conditional(d_.rows_of_rater[i], s_.alpha[i], 0.0, h_.alpha_var);
        for (std::size_t k = 0; k < s_.theta.size(); ++k) s_.theta[k] = conditional(d_.rows_of_theta[k], s_.theta[k], 0.0, h_.theta_var);
        for (std::size_t g = 0; g < s_.gamma.size(); ++g) s_.gamma[g] = conditional(d_.rows_of_dim[g], s_.gamma[g], 0.0, h_.gamma_var);
        shift_moves();
        update_sigma2();
    }

    const State& state() const { return s_; }

private:
    double pred(std::size_t r) const {
        return s_.mu + s_.alpha[d_.rater_of[r]] + s_.theta[d_.theta_of[r]] + s_.gamma[d_.dim_of[r]];
    }

    double normal(double mean, double var) { return mean + std::sqrt(var) * std_normal_(rng_); }

    // Draw of one additive term from its full conditional: residuals of the
    // rows it touches, with the term itself added back.
    double conditional(const std::vector<std::size_t>& rows, double current, double prior_mean, double prior_var) {
        double sum = 0;
        for (std::size_t r : rows) sum += d_.y[r] - pred(r) + current;
        const double precision = 1.0 / prior_var + rows.size() / s_.sigma2;
        const double mean = (prior_mean / prior_var + sum / s_.sigma2) / precision;
        return normal(mean, 1.0 / precision);
    }

    void update_mu() {
        std::vector<std::size_t> all(d_.y.size());
        std::iota(all.begin(), all.end(), 0);
        s_.mu = conditional(all, s_.mu, h_.mu_mean, h_.mu_var);
    }

    // Exact conditional draws along directions the likelihood cannot see.
    void shift_moves() {
        {
            const double sa = std::accumulate(s_.alpha.begin(), s_.alpha.end(), 0.0);
            const double prec = 1.0 / h_.mu_var + s_.alpha.size() / h_.alpha_var;
            const double delta = normal((-(s_.mu - h_.mu_mean) / h_.mu_var + sa / h_.alpha_var) / prec, 1.0 / prec);
            s_.mu += delta;
            for (double& a : s_.alpha) a -= delta;
        }
        for (std::size_t g = 0; g < s_.gamma.size(); ++g) {
            const auto& ks = d_.thetas_of_dim[g];
            double st = 0;
            for (std::size_t k : ks) st += s_.theta[k];
            const double prec = 1.0 / h_.gamma_var + ks.size() / h_.theta_var;
            const double delta = normal((-s_.gamma[g] / h_.gamma_var + st / h_.theta_var) / prec, 1.0 / prec);
            s_.gamma[g] += delta;
            for (std::size_t k : ks) s_.theta[k] -= delta;
        }
        {
            const double sg = std::accumulate(s_.gamma.begin(), s_.gamma.end(), 0.0);
            const double prec = 1.0 / h_.mu_var + s_.gamma.size() / h_.gamma_var;
            const double delta = normal((-(s_.mu - h_.mu_mean) / h_.mu_var + sg / h_.gamma_var) / prec, 1.0 / prec);
            s_.mu += delta;
            for (double& g : s_.gamma) g -= delta;
        }
    }

    void update_sigma2() {
        double ss = 0;
        for (std::size_t r = 0; r < d_.y.size(); ++r) {
            const double e = d_.y[r] - pred(r);
            ss += e * e;
        }
        const double shape = h_.sigma_shape + d_.y.size() / 2.0;
        const double rate = h_.sigma_scale + ss / 2.0;
        std::gamma_distribution<double> g(shape, 1.0 / rate);
        double precision = g(rng_);
        while (!(precision > 0) || !std::isfinite(1.0 / precision)) precision = g(rng_);
        s_.sigma2 = 1.0 / precision;
    }

    const Design& d_;
    Hyperparams h_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> std_normal_{0.0, 1.0};
    State s_;
};

ParameterSummary summarize(std::string name, const std::vector<double>& x) {
    ParameterSummary p;
    p.name = std::move(name);
    const double n = static_cast<double>(x.size());
    p.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0;
    for (double v : x) ss += (v - p.mean) * (v - p.mean);
    p.sd = x.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    p.lower = quantile(x, 0.025);
    p.upper = quantile(x, 0.975);
    p.ess = effective_sample_size(x);
    p.rhat = split_rhat(x);
    p.mcse = p.ess > 0 ? p.sd / std::sqrt(p.ess) : 0.0;
    return p;
}

} // namespace

PosteriorSummary fit(const RatingTable& table, Dimension dimension, const Hyperparams& hyper,
                     const SamplerOptions& options) {
    if (options.n_samples < 1000)
        throw Error(ErrorCode::InvalidArgument, "n_samples must be at least 1000");
    for (double v : {hyper.mu_var, hyper.alpha_var, hyper.theta_var, hyper.gamma_var, hyper.sigma_shape, hyper.sigma_scale})
        if (!(v > 0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "hyperparameters must be positive");
    const auto rows = table.rows_for(dimension);
    std::vector<std::string> raters;
    for (const auto& r : rows) raters.push_back(r.rater_id);
    std::sort(raters.begin(), raters.end());
    raters.erase(std::unique(raters.begin(), raters.end()), raters.end());
    const auto prompts = table.prompts(dimension);
    if (raters.size() < 2 || prompts.size() < 2)
        throw Error(ErrorCode::InsufficientData,
                    std::string(to_string(dimension)) + " needs at least 2 raters and 2 prompts (have " +
                        std::to_string(raters.size()) + " and " + std::to_string(prompts.size()) + ")");

    const Design d = build_design(table);
    Sampler sampler(d, hyper, options.seed);

    PosteriorSummary out;
    out.dimension = dimension;
    out.n_samples = options.n_samples;
    out.n_burnin = options.n_burnin;
    out.seed = options.seed;

    std::vector<std::string> names{"mu", "sigma2"};
    for (Dimension dim : d.dims) names.push_back("gamma[" + std::string(to_string(dim)) + "]");
    for (const auto& r : d.raters) names.push_back("alpha[" + r + "]");
    for (const auto& [di, p] : d.thetas) names.push_back("theta[" + std::string(to_string(d.dims[di])) + "/" + p + "]");
    out.draws.assign(names.size(), std::vector<double>(options.n_samples));

    for (std::size_t it = 0; it < options.n_burnin; ++it) sampler.sweep();
    const std::size_t n_dims = d.dims.size();
    std::vector<double> theta_mean(n_dims), gamma_adj(n_dims);
    for (std::size_t s = 0; s < options.n_samples; ++s) {
        sampler.sweep();
        const State& st = sampler.state();
        // Centering: alpha and each dimension's theta sum to zero, gamma is
        // the offset from the cross-dimension mean, and mu absorbs the rest.
        const double abar = std::accumulate(st.alpha.begin(), st.alpha.end(), 0.0) / st.alpha.size();
        for (std::size_t g = 0; g < n_dims; ++g) {
            double t = 0;
            for (std::size_t k : d.thetas_of_dim[g]) t += st.theta[k];
            theta_mean[g] = t / d.thetas_of_dim[g].size();
            gamma_adj[g] = st.gamma[g] + theta_mean[g];
        }
        const double gbar = std::accumulate(gamma_adj.begin(), gamma_adj.end(), 0.0) / n_dims;
        std::size_t p = 0;
        out.draws[p++][s] = st.mu + abar + gbar;
        out.draws[p++][s] = st.sigma2;
        for (std::size_t g = 0; g < n_dims; ++g) out.draws[p++][s] = gamma_adj[g] - gbar;
        for (double a : st.alpha) out.draws[p++][s] = a - abar;
        for (std::size_t k = 0; k < st.theta.size(); ++k) out.draws[p++][s] = st.theta[k] - theta_mean[d.thetas[k].first];
    }

    for (std::size_t p = 0; p < names.size(); ++p) {
        out.parameters.push_back(summarize(names[p], out.draws[p]));
        const double r = out.parameters.back().rhat;
        if (std::isfinite(r) ? r > 1.1 : !std::isnan(r)) out.non_convergence = true;
    }
    return out;
}

const ParameterSummary& PosteriorSummary::at(std::string_view name) const {
    for (const auto& p : parameters)
        if (p.name == name) return p;
    throw Error(ErrorCode::NotFound, "no parameter " + std::string(name), {std::string(name)});
}

const std::vector<double>& PosteriorSummary::draws_of(std::string_view name) const {
    for (std::size_t i = 0; i < parameters.size(); ++i)
        if (parameters[i].name == name) return draws[i];
    throw Error(ErrorCode::NotFound, "no parameter " + std::string(name), {std::string(name)});
}

const ParameterSummary& PosteriorSummary::gamma() const {
    return at("gamma[" + std::string(to_string(dimension)) + "]");
}

double PosteriorSummary::alpha(std::string_view rater) const { return at("alpha[" + std::string(rater) + "]").mean; }

std::vector<std::string> PosteriorSummary::raters() const {
    std::vector<std::string> out;
    for (const auto& p : parameters)
        if (p.name.rfind("alpha[", 0) == 0) out.push_back(p.name.substr(6, p.name.size() - 7));
    return out;
}

nlohmann::json to_json(const PosteriorSummary& s, bool include_draws) {
    nlohmann::json params = nlohmann::json::array();
    for (std::size_t i = 0; i < s.parameters.size(); ++i) {
        const auto& p = s.parameters[i];
        nlohmann::json j{{"name", p.name}, {"mean", p.mean},   {"sd", p.sd},     {"ci95", {p.lower, p.upper}},
                         {"ess", p.ess},   {"rhat", p.rhat},   {"mcse", p.mcse}};
        if (include_draws) j["draws"] = s.draws[i];
        params.push_back(std::move(j));
    }
    return {{"dimension", std::string(to_string(s.dimension))},
            {"n_samples", s.n_samples},
            {"n_burnin", s.n_burnin},
            {"seed", s.seed},
            {"non_convergence", s.non_convergence},
            {"parameters", params}};
}

std::string format_summary(const PosteriorSummary& s) {
    std::ostringstream out;
    out << "dimension: " << to_string(s.dimension) << "  samples: " << s.n_samples << "  burn-in: " << s.n_burnin
        << "  seed: " << s.seed << '\n';
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-40s %9s %9s %9s %9s %9s %7s\n", "parameter", "mean", "sd", "2.5%", "97.5%",
                  "ess", "rhat");
    out << buf;
    for (const auto& p : s.parameters) {
        std::snprintf(buf, sizeof buf, "%-40s %9.4f %9.4f %9.4f %9.4f %9.1f %7.3f\n", p.name.c_str(), p.mean, p.sd,
                      p.lower, p.upper, p.ess, p.rhat);
        out << buf;
    }
    if (s.non_convergence) out << "warning: NonConvergence (split R-hat above 1.1)\n";
    return out.str();
}

AdjustedScores adjusted_scores(const RatingTable& table, Dimension dimension, const PosteriorSummary& summary) {
    if (summary.dimension != dimension)
        throw Error(ErrorCode::DimensionMismatch,
                    "summary was fitted for " + std::string(to_string(summary.dimension)) + ", not " +
                        std::string(to_string(dimension)));
    AdjustedScores out{dimension, summary.gamma().mean, {}};
    for (const auto& r : table.rows_for(dimension)) {
        const double a = summary.alpha(r.rater_id);
        out.scores.push_back({r.rater_id, r.prompt_id, r.score, r.score - a});
    }
    return out;
}

AdjustedScores adjusted_scores(const RatingTable& table, const PosteriorSummary& summary) {
    const auto dims = table.dimensions();
    if (dims.size() != 1 || dims.front() != summary.dimension)
        throw Error(ErrorCode::DimensionMismatch,
                    "ratings do not match the fitted dimension " + std::string(to_string(summary.dimension)));
    return adjusted_scores(table, summary.dimension, summary);
}

nlohmann::json to_json(const AdjustedScores& a) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : a.scores)
        rows.push_back({{"rater_id", s.rater_id}, {"prompt_id", s.prompt_id}, {"raw", s.raw}, {"corrected", s.corrected}});
    return {{"dimension", std::string(to_string(a.dimension))}, {"dimension_effect", a.dimension_effect}, {"scores", rows}};
}

} // namespace fairkg::eval
