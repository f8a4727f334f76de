#include "cwo/scenario.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cwo/rng.hpp"

namespace cwo {

namespace {

constexpr std::uint64_t kCoeffStream = 0x636f6566;   // coefficient draws
constexpr std::uint64_t kSampleStream = 0x73616d70;  // ancestral sampling

// Uniform(-1, 1) structural coefficients; confounder loadings are drawn
// from Uniform(0.5, 1.5) so the front-door confounding never degenerates,
// and the front-door mediator path (X->Z, Z->Y) from Uniform(-5, 5) so the
// outcome surface stays substantially nonlinear as the Z block widens.
constexpr double kMediatorScale = 5.0;

double draw_coeff(const rng::CounterRng& var_stream, int j, bool confounder_loading,
                  double scale) {
    const double u = var_stream.uniform(static_cast<std::uint64_t>(j));
    return confounder_loading ? 0.5 + u : scale * (2.0 * u - 1.0);
}

struct GaussHermite {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;  // normalized: E[f(eps)] = sum_i weights_i f(nodes_i)
};

// Golub-Welsch on the Hermite Jacobi matrix, rescaled so that the rule
// integrates against the standard normal density.
const GaussHermite& gauss_hermite_21() {
    static const GaussHermite rule = [] {
        constexpr int n = 21;
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            const double b = std::sqrt(k / 2.0);
            jacobi(k - 1, k) = b;
            jacobi(k, k - 1) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
        GaussHermite out;
        out.nodes = solver.eigenvalues() * std::sqrt(2.0);
        out.weights.resize(n);
        for (int i = 0; i < n; ++i) {
            const double v0 = solver.eigenvectors()(0, i);
            out.weights[i] = v0 * v0;
        }
        return out;
    }();
    return rule;
}

// E[sigmoid(m + sd * eps)], eps ~ N(0,1).
double squashed_mean(double m, double sd) {
    if (sd == 0.0) return sigmoid(m);
    const GaussHermite& gh = gauss_hermite_21();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < gh.nodes.size(); ++i)
        acc += gh.weights[i] * sigmoid(m + sd * gh.nodes[i]);
    return acc;
}

double linear_index(const Variable& v, const std::vector<double>& values) {
    double m = v.coefficients[0];
    for (std::size_t p = 0; p < v.parents.size(); ++p)
        m += v.coefficients[static_cast<Eigen::Index>(p) + 1] * values[static_cast<std::size_t>(v.parents[p])];
    return m;
}

// Fills `values` for one row of the (optionally mutilated) model.
void sample_row(const Scm& scm, const rng::CounterRng& row_stream,
                const std::map<std::string, int>* intervention, std::vector<double>& values) {
    for (std::size_t vi = 0; vi < scm.variables.size(); ++vi) {
        const Variable& v = scm.variables[vi];
        if (intervention) {
            auto it = intervention->find(v.name);
            if (it != intervention->end()) {
                values[vi] = static_cast<double>(it->second);
                continue;
            }
        }
        const double m = linear_index(v, values);
        switch (v.equation) {
            case EquationKind::LogisticBernoulli:
                values[vi] = row_stream.fork(vi).uniform(0) < sigmoid(m) ? 1.0 : 0.0;
                break;
            case EquationKind::LinearDeterministic:
                values[vi] = m;
                break;
            case EquationKind::SquashedLinear:
                values[vi] = sigmoid(m + scm.noise_sd * row_stream.fork(vi).normal(0));
                break;
        }
    }
}

Dataset ancestral_sample(const Scm& scm, Eigen::Index n, std::uint64_t seed,
                         const TreatmentAssignment* a, bool keep_latent) {
    if (n < 1) throw std::invalid_argument("sample: n must be positive");
    if (a) a->validate(scm);

    std::vector<int> out_vars = scm.observed_order;
    if (keep_latent)
        for (std::size_t vi = 0; vi < scm.variables.size(); ++vi)
            if (scm.variables[vi].latent) out_vars.push_back(static_cast<int>(vi));

    Eigen::MatrixXd data(n, static_cast<Eigen::Index>(out_vars.size()));
    const rng::CounterRng root = rng::CounterRng(seed).fork(kSampleStream);
    std::vector<double> values(scm.variables.size());
    const std::map<std::string, int>* intervention = a ? &a->assignments : nullptr;
    for (Eigen::Index i = 0; i < n; ++i) {
        sample_row(scm, root.fork(static_cast<std::uint64_t>(i)), intervention, values);
        for (std::size_t j = 0; j < out_vars.size(); ++j)
            data(i, static_cast<Eigen::Index>(j)) = values[static_cast<std::size_t>(out_vars[j])];
    }

    std::vector<ColumnInfo> columns;
    columns.reserve(out_vars.size());
    for (int vi : out_vars)
        columns.push_back({scm.variables[static_cast<std::size_t>(vi)].name,
                           scm.variables[static_cast<std::size_t>(vi)].kind});
    return Dataset(std::move(columns), std::move(data));
}

void append_block(std::vector<Variable>& vars, const std::string& prefix, int dim) {
    for (int j = 1; j <= dim; ++j)
        vars.push_back({prefix + std::to_string(j), ValueKind::Binary,
                        EquationKind::LogisticBernoulli, false, {}, {}});
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::FrontDoor: return "frontdoor";
        case Scenario::Surrogate: return "surrogate";
        case Scenario::Msbd: return "msbd";
    }
    throw std::logic_error("unknown scenario");
}

Scenario scenario_from_string(const std::string& name) {
    if (name == "frontdoor") return Scenario::FrontDoor;
    if (name == "surrogate") return Scenario::Surrogate;
    if (name == "msbd") return Scenario::Msbd;
    throw std::invalid_argument("unknown scenario '" + name + "' (expected frontdoor|surrogate|msbd)");
}

void ScenarioSpec::validate() const {
    if (dim < 1) throw std::invalid_argument("scenario spec: dim must be >= 1");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("scenario spec: noise_sd must be >= 0");
}

int Scm::var_index(const std::string& name) const {
    for (std::size_t vi = 0; vi < variables.size(); ++vi)
        if (variables[vi].name == name) return static_cast<int>(vi);
    throw std::out_of_range("scm: no variable '" + name + "'");
}

const Variable& Scm::variable(const std::string& name) const {
    return variables[static_cast<std::size_t>(var_index(name))];
}

std::vector<std::string> Scm::treatment_names() const {
    if (kind == Scenario::Msbd) return {"X1", "X2"};
    return {"X"};
}

const std::string& Scm::outcome_name() const {
    return variables.back().name;
}

void Scm::set_coefficient(const std::string& var, const std::string& parent, double value) {
    Variable& v = variables[static_cast<std::size_t>(var_index(var))];
    const int pi = var_index(parent);
    for (std::size_t p = 0; p < v.parents.size(); ++p)
        if (v.parents[p] == pi) {
            v.coefficients[static_cast<Eigen::Index>(p) + 1] = value;
            return;
        }
    throw std::out_of_range("scm: '" + parent + "' is not a parent of '" + var + "'");
}

void Scm::set_intercept(const std::string& var, double value) {
    variables[static_cast<std::size_t>(var_index(var))].coefficients[0] = value;
}

std::string TreatmentAssignment::key() const {
    std::string k;
    for (const auto& [name, value] : assignments) k += value ? '1' : '0';
    return k;
}

void TreatmentAssignment::validate(const Scm& scm) const {
    const std::vector<std::string> expected = scm.treatment_names();
    if (assignments.size() != expected.size())
        throw std::invalid_argument("treatment assignment does not match scenario");
    for (const auto& name : expected) {
        auto it = assignments.find(name);
        if (it == assignments.end())
            throw std::invalid_argument("treatment assignment missing variable '" + name + "'");
        if (it->second != 0 && it->second != 1)
            throw std::invalid_argument("treatment value for '" + name + "' must be 0 or 1");
    }
}

std::vector<TreatmentAssignment> assignment_grid(Scenario kind) {
    std::vector<TreatmentAssignment> grid;
    if (kind == Scenario::Msbd) {
        for (int x1 = 0; x1 <= 1; ++x1)
            for (int x2 = 0; x2 <= 1; ++x2)
                grid.push_back({{{"X1", x1}, {"X2", x2}}});
    } else {
        for (int x = 0; x <= 1; ++x) grid.push_back({{{"X", x}}});
    }
    return grid;
}

Scm build_scenario(const ScenarioSpec& spec) {
    spec.validate();
    Scm scm;
    scm.kind = spec.kind;
    scm.noise_sd = spec.noise_sd;
    auto& vars = scm.variables;
    const int d = spec.dim;

    auto index_of = [&vars](const std::string& name) {
        for (std::size_t vi = 0; vi < vars.size(); ++vi)
            if (vars[vi].name == name) return static_cast<int>(vi);
        throw std::logic_error("bad parent '" + name + "'");
    };
    auto parents_of = [&index_of](const std::vector<std::string>& names) {
        std::vector<int> out;
        out.reserve(names.size());
        for (const auto& n : names) out.push_back(index_of(n));
        return out;
    };

    switch (spec.kind) {
        case Scenario::FrontDoor: {
            vars.push_back({"U", ValueKind::Binary, EquationKind::LogisticBernoulli, true, {}, {}});
            vars.push_back({"X", ValueKind::Binary, EquationKind::LogisticBernoulli, false,
                            parents_of({"U"}), {}});
            append_block(vars, "Z", d);
            std::vector<std::string> y_parents;
            for (int j = 1; j <= d; ++j) y_parents.push_back("Z" + std::to_string(j));
            y_parents.push_back("U");
            for (int j = 1; j <= d; ++j)
                vars[static_cast<std::size_t>(index_of("Z" + std::to_string(j)))].parents =
                    parents_of({"X"});
            vars.push_back({"Y", ValueKind::Continuous, EquationKind::SquashedLinear, false,
                            parents_of(y_parents), {}});
            scm.observed_order.push_back(index_of("X"));
            for (int j = 1; j <= d; ++j) scm.observed_order.push_back(index_of("Z" + std::to_string(j)));
            scm.observed_order.push_back(index_of("Y"));
            break;
        }
        case Scenario::Surrogate: {
            append_block(vars, "Z", d);
            std::vector<std::string> z_names;
            for (int j = 1; j <= d; ++j) z_names.push_back("Z" + std::to_string(j));
            vars.push_back({"X", ValueKind::Binary, EquationKind::LogisticBernoulli, false,
                            parents_of(z_names), {}});
            vars.push_back({"W", ValueKind::Binary, EquationKind::LinearDeterministic, false,
                            parents_of({"X"}), {}});
            std::vector<std::string> y_parents = z_names;
            y_parents.push_back("W");
            vars.push_back({"Y", ValueKind::Continuous, EquationKind::SquashedLinear, false,
                            parents_of(y_parents), {}});
            scm.observed_order.push_back(index_of("X"));
            scm.observed_order.push_back(index_of("W"));
            for (const auto& z : z_names) scm.observed_order.push_back(index_of(z));
            scm.observed_order.push_back(index_of("Y"));
            break;
        }
        case Scenario::Msbd: {
            append_block(vars, "Z1_", d);
            std::vector<std::string> z1_names, z2_names;
            for (int j = 1; j <= d; ++j) z1_names.push_back("Z1_" + std::to_string(j));
            vars.push_back({"X1", ValueKind::Binary, EquationKind::LogisticBernoulli, false,
                            parents_of(z1_names), {}});
            std::vector<std::string> y1_parents = z1_names;
            y1_parents.push_back("X1");
            vars.push_back({"Y1", ValueKind::Binary, EquationKind::LogisticBernoulli, false,
                            parents_of(y1_parents), {}});
            std::vector<std::string> hist = z1_names;
            hist.push_back("X1");
            hist.push_back("Y1");
            append_block(vars, "Z2_", d);
            for (int j = 1; j <= d; ++j) {
                z2_names.push_back("Z2_" + std::to_string(j));
                vars[static_cast<std::size_t>(index_of(z2_names.back()))].parents = parents_of(hist);
            }
            std::vector<std::string> x2_parents = {"X1", "Y1"};
            x2_parents.insert(x2_parents.end(), z2_names.begin(), z2_names.end());
            vars.push_back({"X2", ValueKind::Binary, EquationKind::LogisticBernoulli, false,
                            parents_of(x2_parents), {}});
            std::vector<std::string> y2_parents = z1_names;
            y2_parents.push_back("X1");
            y2_parents.push_back("Y1");
            y2_parents.insert(y2_parents.end(), z2_names.begin(), z2_names.end());
            y2_parents.push_back("X2");
            vars.push_back({"Y2", ValueKind::Continuous, EquationKind::SquashedLinear, false,
                            parents_of(y2_parents), {}});
            for (std::size_t vi = 0; vi < vars.size(); ++vi)
                scm.observed_order.push_back(static_cast<int>(vi));
            break;
        }
    }

    const rng::CounterRng coeff_root = rng::CounterRng(spec.coeff_seed).fork(kCoeffStream);
    for (std::size_t vi = 0; vi < vars.size(); ++vi) {
        Variable& v = vars[vi];
        v.coefficients.resize(static_cast<Eigen::Index>(v.parents.size()) + 1);
        if (v.equation == EquationKind::LinearDeterministic) {
            // Surrogate W = 1 - X.
            v.coefficients[0] = 1.0;
            v.coefficients[1] = -1.0;
            continue;
        }
        const rng::CounterRng var_stream = coeff_root.fork(vi);
        for (Eigen::Index j = 0; j < v.coefficients.size(); ++j) {
            bool loading = false;
            double scale = 1.0;
            if (spec.kind == Scenario::FrontDoor && j > 0) {
                const Variable& parent =
                    vars[static_cast<std::size_t>(v.parents[static_cast<std::size_t>(j - 1)])];
                loading = parent.latent;
                const bool x_to_z = v.name.starts_with("Z") && parent.name == "X";
                const bool z_to_y = v.name == "Y" && parent.name.starts_with("Z");
                if (x_to_z || z_to_y) scale = kMediatorScale;
            }
            v.coefficients[j] = draw_coeff(var_stream, static_cast<int>(j), loading, scale);
        }
    }
    return scm;
}

Dataset sample(const Scm& scm, Eigen::Index n, std::uint64_t seed, bool keep_latent) {
    return ancestral_sample(scm, n, seed, nullptr, keep_latent);
}

Dataset sample_do(const Scm& scm, const TreatmentAssignment& a, Eigen::Index n, std::uint64_t seed,
                  bool keep_latent) {
    return ancestral_sample(scm, n, seed, &a, keep_latent);
}

double exact_truth(const Scm& scm, const TreatmentAssignment& a) {
    a.validate(scm);
    int binary_count = 0;
    for (const auto& v : scm.variables)
        if (v.kind == ValueKind::Binary) ++binary_count;
    if (binary_count > kEnumerationBound)
        throw std::domain_error("exact_truth: " + std::to_string(binary_count) +
                                " binary variables exceed the enumeration bound of " +
                                std::to_string(kEnumerationBound));
    const std::size_t outcome = scm.variables.size() - 1;
    if (scm.variables[outcome].latent)
        throw std::invalid_argument("exact_truth: outcome must be the last variable");

    std::vector<double> values(scm.variables.size(), 0.0);
    double expectation = 0.0;

    // Depth-first walk over the mutilated model's configurations.
    auto walk = [&](auto&& self, std::size_t vi, double prob) -> void {
        if (vi == outcome) {
            const Variable& y = scm.variables[vi];
            const double m = linear_index(y, values);
            double mean = 0.0;
            switch (y.equation) {
                case EquationKind::SquashedLinear: mean = squashed_mean(m, scm.noise_sd); break;
                case EquationKind::LogisticBernoulli: mean = sigmoid(m); break;
                case EquationKind::LinearDeterministic: mean = m; break;
            }
            expectation += prob * mean;
            return;
        }
        const Variable& v = scm.variables[vi];
        auto it = a.assignments.find(v.name);
        if (it != a.assignments.end()) {
            values[vi] = static_cast<double>(it->second);
            self(self, vi + 1, prob);
            return;
        }
        switch (v.equation) {
            case EquationKind::LogisticBernoulli: {
                const double p = sigmoid(linear_index(v, values));
                values[vi] = 1.0;
                self(self, vi + 1, prob * p);
                values[vi] = 0.0;
                self(self, vi + 1, prob * (1.0 - p));
                break;
            }
            case EquationKind::LinearDeterministic:
                values[vi] = linear_index(v, values);
                self(self, vi + 1, prob);
                break;
            case EquationKind::SquashedLinear:
                throw std::invalid_argument(
                    "exact_truth: continuous non-outcome variables are not enumerable");
        }
    };
    walk(walk, 0, 1.0);
    return expectation;
}

double mc_truth(const Scm& scm, const TreatmentAssignment& a, Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("mc_truth: n must be positive");
    a.validate(scm);
    const std::size_t outcome = scm.variables.size() - 1;
    const rng::CounterRng root = rng::CounterRng(seed).fork(kSampleStream);
    std::vector<double> values(scm.variables.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sample_row(scm, root.fork(static_cast<std::uint64_t>(i)), &a.assignments, values);
        acc += values[outcome];
    }
    return acc / static_cast<double>(n);
}

}  // namespace cwo
