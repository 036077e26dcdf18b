#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <variant>

namespace hmc
{

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// f(x) = 1/2 (x - b)^T A (x - b) with A symmetric positive definite.
///
/// A is stored by its spectrum. `eigenvectors` is empty when A is diagonal in
/// the coordinate basis, in which case `eigenvalues[i]` is A_ii.
struct QuadraticParams
{
    Vector eigenvalues;
    Matrix eigenvectors;
    Matrix matrix;
    Vector center;

    bool diagonal() const { return eigenvectors.size() == 0; }
};

/// f(x) = sum_i (mu/2) x_i^2 + (L - mu) log cosh(x_i).
struct LogCoshParams
{
};

enum class PotentialKind
{
    quadratic,
    logcosh
};

std::string_view to_string(PotentialKind kind);
PotentialKind parse_potential_kind(std::string_view name);

/// Phase-space point (x, v).
struct PhaseState
{
    Vector position;
    Vector velocity;
};

/// A mu-strongly convex, L-smooth energy f on R^d.
///
/// Immutable after construction; all member functions are const and
/// reentrant. Only f and its gradient are exposed.
class Potential
{
  public:
    /// Diagonal quadratic with A = diag(eigenvalues). Bounds default to the
    /// extreme eigenvalues; explicit bounds must bracket the spectrum.
    static Potential quadratic_diagonal(Vector eigenvalues,
                                        Vector center = {},
                                        std::optional<double> mu = {},
                                        std::optional<double> lipschitz = {});

    /// Dense SPD quadratic; eigendecomposed once here.
    static Potential quadratic_matrix(Matrix const& matrix,
                                      Vector center = {},
                                      std::optional<double> mu = {},
                                      std::optional<double> lipschitz = {});

    /// Diagonal quadratic with eigenvalues evenly spaced on [mu, L]. For
    /// dim == 2 this is the two-scale Gaussian diag(mu, L).
    static Potential quadratic_spread(Eigen::Index dim, double mu, double lipschitz,
                                      Vector center = {});

    static Potential logcosh(Eigen::Index dim, double mu, double lipschitz);

    Eigen::Index dim() const { return dim_; }
    double mu() const { return mu_; }
    double lipschitz() const { return lipschitz_; }
    double kappa() const { return lipschitz_ / mu_; }
    PotentialKind kind() const;

    /// Null unless kind() == quadratic.
    QuadraticParams const* quadratic() const { return std::get_if<QuadraticParams>(&params_); }

    /// Closed-form minimizer (b for quadratics, 0 for log-cosh).
    Vector minimizer() const;

    double value(Eigen::Ref<Vector const> x) const;
    Vector gradient(Eigen::Ref<Vector const> x) const;
    void gradient(Eigen::Ref<Vector const> x, Eigen::Ref<Vector> out) const;

  private:
    Potential(Eigen::Index dim, double mu, double lipschitz,
              std::variant<QuadraticParams, LogCoshParams> params);

    void check_dim(Eigen::Index n, char const* what) const;

    Eigen::Index dim_;
    double mu_;
    double lipschitz_;
    std::variant<QuadraticParams, LogCoshParams> params_;
};

double eval_potential(Potential const& p, Eigen::Ref<Vector const> x);
Vector eval_gradient(Potential const& p, Eigen::Ref<Vector const> x);

/// <grad f(x) - grad f(y), x - y> / |x - y|^2, which lies in [mu, L].
///
/// Throws DegenerateInputError when x == y.
double directional_secant_curvature(Potential const& p,
                                    Eigen::Ref<Vector const> x,
                                    Eigen::Ref<Vector const> y);

/// H(x, v) = f(x) + |v|^2 / 2.
double hamiltonian_energy(Potential const& p, PhaseState const& s);

}  // namespace hmc
