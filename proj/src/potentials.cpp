#include "hmc/potentials.hpp"

#include "hmc/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hmc
{
namespace
{
// Relative slack when checking a spectrum against declared bounds.
constexpr double kSpectrumSlack = 1e-12;

double log_cosh(double x)
{
    double const a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

void check_finite(Eigen::Ref<Vector const> x, char const* what)
{
    if (!x.allFinite())
    {
        throw InputError(std::string(what) + " must be finite");
    }
}

void check_bounds(double mu, double lipschitz)
{
    if (!(mu > 0) || !std::isfinite(mu))
    {
        throw InputError("mu must be positive and finite");
    }
    if (!(lipschitz >= mu) || !std::isfinite(lipschitz))
    {
        throw InputError("L must be finite and at least mu");
    }
}

Vector default_center(Vector center, Eigen::Index dim)
{
    if (center.size() == 0)
    {
        return Vector::Zero(dim);
    }
    if (center.size() != dim)
    {
        throw InputError("center has length " + std::to_string(center.size())
                         + ", expected " + std::to_string(dim));
    }
    check_finite(center, "center");
    return center;
}

std::pair<double, double> resolve_bounds(Vector const& eigenvalues,
                                         std::optional<double> mu,
                                         std::optional<double> lipschitz)
{
    double const lo = eigenvalues.minCoeff();
    double const hi = eigenvalues.maxCoeff();
    double const m = mu.value_or(lo);
    double const l = lipschitz.value_or(hi);
    check_bounds(m, l);
    if (lo < m * (1 - kSpectrumSlack) || hi > l * (1 + kSpectrumSlack))
    {
        throw InputError("quadratic spectrum [" + std::to_string(lo) + ", " + std::to_string(hi)
                         + "] is not inside [mu, L]");
    }
    return {m, l};
}
}  // namespace

std::string_view to_string(PotentialKind kind)
{
    switch (kind)
    {
        case PotentialKind::quadratic:
            return "quadratic";
        case PotentialKind::logcosh:
            return "logcosh";
    }
    return "unknown";
}

PotentialKind parse_potential_kind(std::string_view name)
{
    if (name == "quadratic")
    {
        return PotentialKind::quadratic;
    }
    if (name == "logcosh")
    {
        return PotentialKind::logcosh;
    }
    throw InputError("unknown potential kind '" + std::string(name) + "'");
}

Potential::Potential(Eigen::Index dim,
                     double mu,
                     double lipschitz,
                     std::variant<QuadraticParams, LogCoshParams> params)
    : dim_(dim), mu_(mu), lipschitz_(lipschitz), params_(std::move(params))
{
}

Potential Potential::quadratic_diagonal(Vector eigenvalues,
                                        Vector center,
                                        std::optional<double> mu,
                                        std::optional<double> lipschitz)
{
    if (eigenvalues.size() == 0)
    {
        throw InputError("quadratic potential needs at least one eigenvalue");
    }
    check_finite(eigenvalues, "eigenvalues");
    auto const [m, l] = resolve_bounds(eigenvalues, mu, lipschitz);
    auto const dim = eigenvalues.size();
    QuadraticParams q;
    q.center = default_center(std::move(center), dim);
    q.eigenvalues = std::move(eigenvalues);
    return Potential(dim, m, l, std::move(q));
}

Potential Potential::quadratic_matrix(Matrix const& matrix,
                                      Vector center,
                                      std::optional<double> mu,
                                      std::optional<double> lipschitz)
{
    if (matrix.rows() == 0 || matrix.rows() != matrix.cols())
    {
        throw InputError("quadratic matrix must be square and non-empty");
    }
    if (!matrix.allFinite())
    {
        throw InputError("quadratic matrix must be finite");
    }
    if (!matrix.isApprox(matrix.transpose(), 1e-12))
    {
        throw InputError("quadratic matrix must be symmetric");
    }
    Matrix const sym = 0.5 * (matrix + matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success)
    {
        throw InputError("eigendecomposition of quadratic matrix failed");
    }
    if (eig.eigenvalues().minCoeff() <= 0)
    {
        throw InputError("quadratic matrix must be positive definite");
    }
    auto const [m, l] = resolve_bounds(eig.eigenvalues(), mu, lipschitz);
    auto const dim = matrix.rows();
    QuadraticParams q;
    q.center = default_center(std::move(center), dim);
    q.eigenvalues = eig.eigenvalues();
    q.eigenvectors = eig.eigenvectors();
    q.matrix = sym;
    return Potential(dim, m, l, std::move(q));
}

Potential Potential::quadratic_spread(Eigen::Index dim, double mu, double lipschitz, Vector center)
{
    if (dim < 1)
    {
        throw InputError("dim must be positive");
    }
    check_bounds(mu, lipschitz);
    Vector eigenvalues = (dim == 1) ? Vector(Vector::Constant(1, mu))
                                    : Vector(Vector::LinSpaced(dim, mu, lipschitz));
    return quadratic_diagonal(std::move(eigenvalues), std::move(center), mu, lipschitz);
}

Potential Potential::logcosh(Eigen::Index dim, double mu, double lipschitz)
{
    if (dim < 1)
    {
        throw InputError("dim must be positive");
    }
    check_bounds(mu, lipschitz);
    return Potential(dim, mu, lipschitz, LogCoshParams{});
}

PotentialKind Potential::kind() const
{
    return std::holds_alternative<QuadraticParams>(params_) ? PotentialKind::quadratic
                                                            : PotentialKind::logcosh;
}

Vector Potential::minimizer() const
{
    if (auto const* q = quadratic())
    {
        return q->center;
    }
    return Vector::Zero(dim_);
}

void Potential::check_dim(Eigen::Index n, char const* what) const
{
    if (n != dim_)
    {
        throw InputError(std::string(what) + " has length " + std::to_string(n) + ", expected "
                         + std::to_string(dim_));
    }
}

double Potential::value(Eigen::Ref<Vector const> x) const
{
    check_dim(x.size(), "x");
    if (auto const* q = quadratic())
    {
        Vector const dx = x - q->center;
        if (q->diagonal())
        {
            return 0.5 * dx.dot(q->eigenvalues.cwiseProduct(dx));
        }
        return 0.5 * dx.dot(q->matrix * dx);
    }
    double const curved = lipschitz_ - mu_;
    double sum = 0;
    for (Eigen::Index i = 0; i < dim_; ++i)
    {
        sum += 0.5 * mu_ * x[i] * x[i] + curved * log_cosh(x[i]);
    }
    return sum;
}

void Potential::gradient(Eigen::Ref<Vector const> x, Eigen::Ref<Vector> out) const
{
    check_dim(x.size(), "x");
    check_dim(out.size(), "gradient output");
    if (auto const* q = quadratic())
    {
        if (q->diagonal())
        {
            out = q->eigenvalues.cwiseProduct(x - q->center);
        }
        else
        {
            out.noalias() = q->matrix * (x - q->center);
        }
        return;
    }
    double const curved = lipschitz_ - mu_;
    for (Eigen::Index i = 0; i < dim_; ++i)
    {
        out[i] = mu_ * x[i] + curved * std::tanh(x[i]);
    }
}

Vector Potential::gradient(Eigen::Ref<Vector const> x) const
{
    Vector out(dim_);
    gradient(x, out);
    return out;
}

double eval_potential(Potential const& p, Eigen::Ref<Vector const> x)
{
    return p.value(x);
}

Vector eval_gradient(Potential const& p, Eigen::Ref<Vector const> x)
{
    return p.gradient(x);
}

double directional_secant_curvature(Potential const& p,
                                    Eigen::Ref<Vector const> x,
                                    Eigen::Ref<Vector const> y)
{
    if (x.size() != y.size())
    {
        throw InputError("x and y differ in length");
    }
    Vector const dx = x - y;
    double const dist2 = dx.squaredNorm();
    if (dist2 == 0)
    {
        throw DegenerateInputError("secant curvature is undefined for x == y");
    }
    return (p.gradient(x) - p.gradient(y)).dot(dx) / dist2;
}

double hamiltonian_energy(Potential const& p, PhaseState const& s)
{
    if (s.position.size() != s.velocity.size())
    {
        throw InputError("position and velocity differ in length");
    }
    return p.value(s.position) + 0.5 * s.velocity.squaredNorm();
}

}  // namespace hmc
