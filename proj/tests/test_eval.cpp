#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <random>

#include "fairkg/error.hpp"
#include "fairkg/eval.hpp"
#include "bhm_oracle.hpp"

using namespace fairkg;
using namespace fairkg::eval;
using testsupport::recovery_table;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::InvalidArgument;
}

SamplerOptions opts(std::size_t n, std::uint64_t seed, std::size_t burnin = 1000) { return {n, burnin, seed}; }

RatingTable constant_table(double value, int raters, int prompts, std::vector<Dimension> dims) {
    RatingTable t;
    for (Dimension d : dims)
        for (int i = 0; i < raters; ++i)
            for (int j = 0; j < prompts; ++j) t.add({"r" + std::to_string(i), "p" + std::to_string(j), d, value});
    return t;
}

double rater_mean(const RatingTable& t, const std::string& rater, Dimension d) {
    double s = 0;
    int n = 0;
    for (const auto& r : t.rows_for(d))
        if (r.rater_id == rater) s += r.score, ++n;
    return s / n;
}

} // namespace

TEST(Ratings, CsvLoading) {
    std::string csv = "\xEF\xBB\xBFrater_id,prompt_id,dimension,score\n";
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 10; ++j) csv += "e" + std::to_string(i) + ",q" + std::to_string(j) + ",IR," + std::to_string(3 + (i + j) % 3) + "\r\n";
    csv += "\"e,3\",\"q \"\"x\"\"\",answer stability,4.5\n";
    const auto t = load_ratings(csv);
    EXPECT_EQ(t.size(), 21u);
    EXPECT_EQ(t.rows_for(Dimension::InformationRetrieval).size(), 20u);
    EXPECT_EQ(t.rows().back().rater_id, "e,3");
    EXPECT_EQ(t.rows().back().prompt_id, "q \"x\"");
    EXPECT_EQ(t.raters(), (std::vector<std::string>{"e,3", "e1", "e2"}));
    EXPECT_EQ(t.dimensions(), (std::vector<Dimension>{Dimension::InformationRetrieval, Dimension::AnswerStability}));

    const std::string h = "rater_id,prompt_id,dimension,score\n";
    EXPECT_EQ(code_of([&] { load_ratings(h + "1,1,IR,4\n1,1,InformationRetrieval,3\n"); }), ErrorCode::DuplicateCell);
    EXPECT_EQ(code_of([&] { load_ratings(h + "1,1,IR,7\n"); }), ErrorCode::ScoreOutOfRange);
    EXPECT_EQ(code_of([&] { load_ratings(h + "1,1,IR,-0.5\n"); }), ErrorCode::ScoreOutOfRange);
    EXPECT_EQ(code_of([&] { load_ratings(h + "1,1,IR,nan\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([&] { load_ratings(h + "1,1,IR\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([&] { load_ratings(h + "1,1,Vibes,3\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([&] { load_ratings(h + "1,1,IR,four\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([&] { load_ratings(h + "\"1,1,IR,4\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([&] { load_ratings("rater,prompt,dim,score\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([&] { load_ratings(""); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([&] { load_ratings_file("/nonexistent/ratings.csv"); }), ErrorCode::IoError);
    EXPECT_EQ(dimension_from_string("cc"), Dimension::ComparisonCapability);
    EXPECT_EQ(dimension_from_string("FactualAccuracy"), Dimension::FactualAccuracy);
    EXPECT_EQ(dimension_from_string("factual_accuracy"), Dimension::FactualAccuracy);
    EXPECT_EQ(code_of([] { dimension_from_string("vibes"); }), ErrorCode::InvalidArgument);
}

TEST(Diagnostics, QuantileEssRhat) {
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> iid(20000), ar(20000);
    double x = 0;
    for (std::size_t i = 0; i < iid.size(); ++i) {
        iid[i] = n(rng);
        x = 0.9 * x + n(rng);
        ar[i] = x;
    }
    EXPECT_NEAR(effective_sample_size(iid) / iid.size(), 1.0, 0.15);
    // AR(1): n (1 - rho) / (1 + rho)
    EXPECT_NEAR(effective_sample_size(ar) / (ar.size() * 0.1 / 1.9), 1.0, 0.3);
    EXPECT_NEAR(split_rhat(iid), 1.0, 0.01);
    std::vector<double> drift(iid);
    for (std::size_t i = 0; i < drift.size(); ++i) drift[i] += i < drift.size() / 2 ? 0.0 : 3.0;
    EXPECT_GT(split_rhat(drift), 1.1);
}

TEST(Fit, Preconditions) {
    auto t = constant_table(4.0, 2, 3, {Dimension::InformationRetrieval});
    EXPECT_EQ(code_of([&] { fit(t, Dimension::InformationRetrieval, {}, opts(999, 1)); }), ErrorCode::InvalidArgument);
    Hyperparams bad;
    bad.alpha_var = 0;
    EXPECT_EQ(code_of([&] { fit(t, Dimension::InformationRetrieval, bad, opts(1000, 1)); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { fit(t, Dimension::AnswerStability, {}, opts(1000, 1)); }), ErrorCode::InsufficientData);
    auto one_rater = constant_table(4.0, 1, 3, {Dimension::InformationRetrieval});
    EXPECT_EQ(code_of([&] { fit(one_rater, Dimension::InformationRetrieval, {}, opts(1000, 1)); }),
              ErrorCode::InsufficientData);
    auto one_prompt = constant_table(4.0, 2, 1, {Dimension::InformationRetrieval});
    EXPECT_EQ(code_of([&] { fit(one_prompt, Dimension::InformationRetrieval, {}, opts(1000, 1)); }),
              ErrorCode::InsufficientData);
}

TEST(Fit, DegenerateEqualScores) {
    const auto t = constant_table(4.0, 2, 10, {Dimension::InformationRetrieval, Dimension::FactualAccuracy});
    const auto s = fit(t, Dimension::InformationRetrieval, {}, opts(10000, 11));
    EXPECT_NEAR(s.mean("mu"), 4.0, 0.05);
    EXPECT_LT(std::abs(s.gamma().mean), 0.05);
    for (const auto& r : s.raters()) EXPECT_LT(std::abs(s.alpha(r)), 0.05) << r;
    EXPECT_LE(s.at("mu").lower, s.mean("mu"));
    EXPECT_LE(s.mean("mu"), s.at("mu").upper);
    EXPECT_FALSE(s.non_convergence);

    const auto adj = adjusted_scores(t, Dimension::InformationRetrieval, s);
    ASSERT_EQ(adj.scores.size(), 20u);
    for (const auto& a : adj.scores) EXPECT_NEAR(a.corrected, a.raw, 0.05);
}

TEST(Fit, RecoversRaterEffects) {
    const auto t = recovery_table(2024);
    const auto start = std::chrono::steady_clock::now();
    const auto s = fit(t, Dimension::InformationRetrieval, {}, opts(10000, 3, 2000));
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 30.0);
    EXPECT_NEAR(s.alpha("A"), 0.3, 0.05);
    EXPECT_NEAR(s.alpha("B"), -0.3, 0.05);
    EXPECT_LT(s.at("alpha[A]").lower, 0.3);
    EXPECT_GT(s.at("alpha[A]").upper, 0.3 - 0.05);

    const auto adj = adjusted_scores(t, s);
    double mean_a = 0, mean_b = 0;
    for (const auto& a : adj.scores) (a.rater_id == "A" ? mean_a : mean_b) += a.corrected / 50.0;
    EXPECT_LT(std::abs(mean_a - mean_b), 0.05);
    EXPECT_DOUBLE_EQ(adj.dimension_effect, s.gamma().mean);
    EXPECT_EQ(to_json(adj)["scores"].size(), 100u);
}

TEST(Fit, CenteringAndPositivity) {
    RatingTable t;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 5);
    for (Dimension d : {Dimension::InformationRetrieval, Dimension::AnswerStability, Dimension::ComparisonCapability})
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) t.add({"r" + std::to_string(i), "p" + std::to_string(j), d, u(rng)});
    const auto s = fit(t, Dimension::AnswerStability, {}, opts(2000, 4, 200));
    EXPECT_EQ(s.parameters.size(), 2u + 3u + 3u + 12u);
    EXPECT_EQ(s.gamma().name, "gamma[AnswerStability]");
    for (std::size_t k = 0; k < s.n_samples; ++k) {
        double sa = 0, sg = 0;
        std::map<std::string, double> st;
        for (std::size_t p = 0; p < s.parameters.size(); ++p) {
            const std::string& name = s.parameters[p].name;
            const double v = s.draws[p][k];
            if (name.rfind("alpha[", 0) == 0) sa += v;
            if (name.rfind("gamma[", 0) == 0) sg += v;
            if (name.rfind("theta[", 0) == 0) st[name.substr(6, name.find('/') - 6)] += v;
            if (name == "sigma2") ASSERT_GT(v, 0.0);
        }
        ASSERT_NEAR(sa, 0.0, 1e-12);
        ASSERT_NEAR(sg, 0.0, 1e-12);
        for (const auto& [dim, v] : st) ASSERT_NEAR(v, 0.0, 1e-12) << dim;
    }
    const auto j = to_json(s, true);
    EXPECT_EQ(j["parameters"].size(), s.parameters.size());
    EXPECT_FALSE(format_summary(s).empty());
}

TEST(Fit, BitIdenticalUnderFixedSeed) {
    const auto t = recovery_table(1);
    const auto a = fit(t, Dimension::InformationRetrieval, {}, opts(1000, 77, 100));
    const auto b = fit(t, Dimension::InformationRetrieval, {}, opts(1000, 77, 100));
    const auto c = fit(t, Dimension::InformationRetrieval, {}, opts(1000, 78, 100));
    EXPECT_EQ(a.draws, b.draws);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_NE(a.draws, c.draws);
}

TEST(Fit, ShrinksRaterDeviations) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 8; ++trial) {
        const int raters = 2 + trial % 3, prompts = 3 + trial % 4;
        std::normal_distribution<double> bias(0.0, 0.6), noise(0.0, 0.5);
        std::vector<double> b(raters);
        for (double& x : b) x = bias(rng);
        RatingTable t;
        for (int i = 0; i < raters; ++i)
            for (int j = 0; j < prompts; ++j)
                t.add({"r" + std::to_string(i), "p" + std::to_string(j), Dimension::FactualAccuracy,
                       std::clamp(3.0 + b[i] + noise(rng), 0.0, 5.0)});
        const auto s = fit(t, Dimension::FactualAccuracy, {}, opts(4000, trial, 500));
        double grand = 0;
        for (const auto& r : t.rows()) grand += r.score / t.size();
        for (int i = 0; i < raters; ++i) {
            const std::string id = "r" + std::to_string(i);
            const double raw = rater_mean(t, id, Dimension::FactualAccuracy) - grand;
            EXPECT_LE(std::abs(s.alpha(id)), std::abs(raw) + 3 * s.at("alpha[" + id + "]").mcse)
                << "trial " << trial << " rater " << id;
        }
    }
}

TEST(Fit, AdjustedScoresRequireMatchingDimension) {
    const auto t = constant_table(3.0, 2, 3, {Dimension::InformationRetrieval, Dimension::AnswerStability});
    const auto s = fit(t, Dimension::InformationRetrieval, {}, opts(1000, 1, 100));
    EXPECT_EQ(code_of([&] { adjusted_scores(t, Dimension::AnswerStability, s); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([&] { adjusted_scores(t, s); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(adjusted_scores(t, Dimension::InformationRetrieval, s).scores.size(), 6u);
}

TEST(Fit, MatchesClosedFormPosteriorOn2x2) {
    const Hyperparams h;
    const RatingTable t = testsupport::oracle_table();
    const auto [g, a, mu, s2] = testsupport::closed_form_2x2(h);
    const auto s = fit(t, Dimension::InformationRetrieval, h, opts(20000, 12345, 2000));
    const auto& pg = s.gamma();
    EXPECT_NEAR(pg.mean, g, 3 * pg.mcse) << "oracle " << g << " mcse " << pg.mcse;
    EXPECT_NEAR(s.mean("alpha[r1]"), a, 3 * s.at("alpha[r1]").mcse) << "oracle " << a;
    EXPECT_NEAR(s.mean("mu"), mu, 3 * s.at("mu").mcse) << "oracle " << mu;
    EXPECT_NEAR(s.mean("sigma2"), s2, 3 * s.at("sigma2").mcse) << "oracle " << s2;
    EXPECT_NEAR(s.mean("gamma[AnswerStability]"), -g, 3 * pg.mcse);
}
