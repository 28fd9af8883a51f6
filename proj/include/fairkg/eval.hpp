#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace fairkg::eval {

enum class Dimension { InformationRetrieval, AnswerStability, FactualAccuracy, ComparisonCapability };

std::string_view to_string(Dimension d);
/// Full names, or IR / AS / FA / CC; case-insensitive.
Dimension dimension_from_string(std::string_view s);

struct Rating {
    std::string rater_id;
    std::string prompt_id;
    Dimension dimension;
    double score;
};

class RatingTable {
public:
    /// Throws DuplicateCell, ScoreOutOfRange.
    void add(Rating r);

    const std::vector<Rating>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    std::vector<std::string> raters() const;                   // sorted
    std::vector<std::string> prompts(Dimension d) const;       // sorted
    std::vector<Dimension> dimensions() const;                 // enum order
    std::vector<Rating> rows_for(Dimension d) const;

private:
    std::vector<Rating> rows_;
    std::map<std::tuple<std::string, std::string, Dimension>, std::size_t> cells_;
};

/// Header "rater_id,prompt_id,dimension,score". Throws MalformedRow,
/// DuplicateCell, ScoreOutOfRange.
RatingTable load_ratings(std::string_view csv);
RatingTable load_ratings_file(const std::string& path);

struct Hyperparams {
    double mu_mean = 2.5;
    double mu_var = 100.0;   // tau^2_mu
    double alpha_var = 1.0;  // sigma^2_alpha
    double theta_var = 1.0;  // sigma^2_theta
    double gamma_var = 1.0;  // sigma^2_gamma
    double sigma_shape = 2.0; // a0
    double sigma_scale = 1.0; // b0
};

struct SamplerOptions {
    std::size_t n_samples = 10000;
    std::size_t n_burnin = 2000;
    std::uint64_t seed = 0;
};

struct ParameterSummary {
    std::string name;
    double mean = 0;
    double sd = 0;
    double lower = 0; // 2.5% quantile
    double upper = 0; // 97.5% quantile
    double ess = 0;
    double rhat = 1;
    double mcse = 0;
};

/// Parameter names: "mu", "sigma2", "gamma[<Dimension>]", "alpha[<rater>]",
/// "theta[<Dimension>/<prompt>]". Stored draws are centered: the alphas sum
/// to zero, the thetas of each dimension sum to zero and the gammas sum to
/// zero.
struct PosteriorSummary {
    Dimension dimension;
    std::size_t n_samples = 0;
    std::size_t n_burnin = 0;
    std::uint64_t seed = 0;
    std::vector<ParameterSummary> parameters;
    std::vector<std::vector<double>> draws; // draws[p][s], parallel to parameters
    bool non_convergence = false;           // some split R-hat above 1.1

    const ParameterSummary& at(std::string_view name) const;
    const std::vector<double>& draws_of(std::string_view name) const;
    double mean(std::string_view name) const { return at(name).mean; }

    const ParameterSummary& gamma() const;
    double alpha(std::string_view rater) const;
    std::vector<std::string> raters() const;
};

/// Gibbs sampler over all dimensions in the table; the summary reports the
/// model with `dimension` as the focus. Throws InsufficientData (fewer than
/// two raters or prompts in the dimension), InvalidArgument (n_samples < 1000).
PosteriorSummary fit(const RatingTable& table, Dimension dimension, const Hyperparams& hyper = {},
                     const SamplerOptions& options = {});

nlohmann::json to_json(const PosteriorSummary& summary, bool include_draws = false);
std::string format_summary(const PosteriorSummary& summary);

struct AdjustedScore {
    std::string rater_id;
    std::string prompt_id;
    double raw;
    double corrected; // raw - alpha_hat
};

struct AdjustedScores {
    Dimension dimension;
    double dimension_effect; // posterior mean gamma
    std::vector<AdjustedScore> scores;
};

/// Bias-corrected scores for `dimension`. Throws DimensionMismatch when the
/// summary was fitted for another dimension.
AdjustedScores adjusted_scores(const RatingTable& table, Dimension dimension, const PosteriorSummary& summary);
/// Same, for a table holding a single dimension.
AdjustedScores adjusted_scores(const RatingTable& table, const PosteriorSummary& summary);

nlohmann::json to_json(const AdjustedScores& adjusted);

// Diagnostics, exposed for tests.
double effective_sample_size(const std::vector<double>& draws);
double split_rhat(const std::vector<double>& draws);
double quantile(std::vector<double> values, double p);

} // namespace fairkg::eval
