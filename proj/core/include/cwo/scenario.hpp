#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cwo/dataset.hpp"

namespace cwo {

enum class Scenario { FrontDoor, Surrogate, Msbd };

[[nodiscard]] std::string to_string(Scenario s);
[[nodiscard]] Scenario scenario_from_string(const std::string& name);

/// Declarative description of one benchmark causal model. Equal specs
/// instantiate bit-identical models.
struct ScenarioSpec {
    Scenario kind = Scenario::FrontDoor;
    int dim = 1;                    // covariates per Z block
    std::uint64_t coeff_seed = 0;   // governs structural-equation coefficients
    double noise_sd = 0.1;          // outcome noise std. dev., pre-squashing

    void validate() const;  // throws std::invalid_argument
};

enum class EquationKind {
    LogisticBernoulli,   // V ~ Bernoulli(sigmoid(c0 + c.pa))
    LinearDeterministic, // V = c0 + c.pa
    SquashedLinear,      // V = sigmoid(c0 + c.pa + eps), eps ~ N(0, noise_sd)
};

struct Variable {
    std::string name;
    ValueKind kind = ValueKind::Binary;
    EquationKind equation = EquationKind::LogisticBernoulli;
    bool latent = false;
    std::vector<int> parents;        // indices into Scm::variables; acyclic
    Eigen::VectorXd coefficients;    // [intercept, one per parent]
};

/// Instantiated structural model. Variables are stored in topological
/// order with the outcome last; `observed_order` gives the dataset column
/// presentation. Treat as immutable once sampling begins.
struct Scm {
    Scenario kind = Scenario::FrontDoor;
    double noise_sd = 0.1;
    std::vector<Variable> variables;
    std::vector<int> observed_order;  // indices of non-latent variables, presentation order

    [[nodiscard]] int var_index(const std::string& name) const;  // throws if absent
    [[nodiscard]] const Variable& variable(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> treatment_names() const;
    [[nodiscard]] const std::string& outcome_name() const;
    /// Overwrites the coefficient of `parent` in `var`'s equation
    /// (used to build severed-path model variants).
    void set_coefficient(const std::string& var, const std::string& parent, double value);
    void set_intercept(const std::string& var, double value);
};

/// do(X = x): one value in {0,1} per treatment variable of the scenario.
struct TreatmentAssignment {
    std::map<std::string, int> assignments;

    /// Canonical key: treatment values concatenated in treatment-name
    /// order, e.g. "1" or "01".
    [[nodiscard]] std::string key() const;
    void validate(const Scm& scm) const;  // throws on scenario mismatch
};

/// The full treatment grid of a scenario: 2 assignments for
/// FrontDoor/Surrogate, 4 for Msbd, in lexicographic order.
[[nodiscard]] std::vector<TreatmentAssignment> assignment_grid(Scenario kind);

[[nodiscard]] Scm build_scenario(const ScenarioSpec& spec);

/// Ancestral sampling in topological order. Latent columns are drawn
/// internally and dropped unless keep_latent is set.
[[nodiscard]] Dataset sample(const Scm& scm, Eigen::Index n, std::uint64_t seed,
                             bool keep_latent = false);

/// Sampling from the mutilated model: every treatment equation is replaced
/// by the constant in `a`.
[[nodiscard]] Dataset sample_do(const Scm& scm, const TreatmentAssignment& a, Eigen::Index n,
                                std::uint64_t seed, bool keep_latent = false);

/// E[outcome | do(a)] by exact enumeration of the binary ancestors of the
/// outcome in the mutilated model. Outcome noise is integrated by 21-point
/// Gauss-Hermite quadrature (error <= 1e-6 for noise_sd <= 0.25). Throws
/// if the model has more than 24 binary variables.
[[nodiscard]] double exact_truth(const Scm& scm, const TreatmentAssignment& a);

inline constexpr int kEnumerationBound = 24;

/// Monte-Carlo ground truth: mean outcome over sample_do(scm, a, n, seed).
[[nodiscard]] double mc_truth(const Scm& scm, const TreatmentAssignment& a, Eigen::Index n,
                              std::uint64_t seed);

[[nodiscard]] inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace cwo
