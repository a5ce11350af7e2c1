#include "livsic/group.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace livsic {

namespace {

double wrap_turns(double t) {
    double r = t - std::floor(t);
    if (r >= 1.0) r -= 1.0;  // guards t = -1e-18 style roundoff
    return r;
}

// Polar projection onto U(d): the unitary factor of the SVD.
Eigen::MatrixXcd reunitarize(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

double unitary_defect_of(const Eigen::MatrixXcd& m) {
    Eigen::MatrixXcd d = m * m.adjoint();
    d -= Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    return d.norm();
}

[[noreturn]] void mixed_group_error(const GroupElement& a, const GroupElement& b) {
    throw std::invalid_argument("group operation on mismatched variants: " + group_name(a) +
                                " vs " + group_name(b));
}

}  // namespace

// ── constructors ────────────────────────────────────────────────────────────

GroupElement make_realvec(std::vector<double> coords) {
    RealVec r;
    r.v = Eigen::Map<Eigen::VectorXd>(coords.data(), static_cast<long>(coords.size()));
    return r;
}

GroupElement make_real(double x) { return make_realvec({x}); }

GroupElement make_circle(double turns) {
    if (!std::isfinite(turns)) throw std::invalid_argument("circle angle must be finite");
    return Circle{wrap_turns(turns)};
}

GroupElement make_unitary(Eigen::MatrixXcd m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw std::invalid_argument("unitary matrix must be square and nonempty");
    double defect = unitary_defect_of(m);
    if (defect > Unitary::kUnitaryTol)
        throw std::invalid_argument("matrix is not unitary: ||m m* - I||_F = " +
                                    std::to_string(defect));
    return Unitary{std::move(m), 0};
}

GroupElement identity_like(const GroupElement& g) {
    return std::visit(
        [](const auto& e) -> GroupElement {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, RealVec>) {
                return RealVec{Eigen::VectorXd::Zero(e.v.size())};
            } else if constexpr (std::is_same_v<T, Circle>) {
                return Circle{0.0};
            } else {
                return Unitary{Eigen::MatrixXcd::Identity(e.m.rows(), e.m.cols()), 0};
            }
        },
        g);
}

bool same_group(const GroupElement& a, const GroupElement& b) {
    if (a.index() != b.index()) return false;
    if (const auto* ra = std::get_if<RealVec>(&a))
        return ra->v.size() == std::get<RealVec>(b).v.size();
    if (const auto* ua = std::get_if<Unitary>(&a))
        return ua->m.rows() == std::get<Unitary>(b).m.rows();
    return true;
}

std::string group_name(const GroupElement& g) {
    return std::visit(
        [](const auto& e) -> std::string {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, RealVec>)
                return "RealVec(" + std::to_string(e.v.size()) + ")";
            else if constexpr (std::is_same_v<T, Circle>)
                return "Circle";
            else
                return "Unitary(" + std::to_string(e.m.rows()) + ")";
        },
        g);
}

// ── group operations ────────────────────────────────────────────────────────

GroupElement multiply(const GroupElement& a, const GroupElement& b) {
    if (!same_group(a, b)) mixed_group_error(a, b);
    if (const auto* ra = std::get_if<RealVec>(&a))
        return RealVec{ra->v + std::get<RealVec>(b).v};
    if (const auto* ca = std::get_if<Circle>(&a))
        return Circle{wrap_turns(ca->turns + std::get<Circle>(b).turns)};
    const auto& ua = std::get<Unitary>(a);
    const auto& ub = std::get<Unitary>(b);
    Unitary out;
    out.m = ua.m * ub.m;
    out.products_since_renorm =
        std::max(ua.products_since_renorm, ub.products_since_renorm) + 1;
    if (out.products_since_renorm >= Unitary::kRenormEvery) {
        out.m = reunitarize(out.m);
        out.products_since_renorm = 0;
    }
    return out;
}

GroupElement inverse(const GroupElement& g) {
    return std::visit(
        [](const auto& e) -> GroupElement {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, RealVec>) {
                return RealVec{-e.v};
            } else if constexpr (std::is_same_v<T, Circle>) {
                return Circle{e.turns == 0.0 ? 0.0 : 1.0 - e.turns};
            } else {
                return Unitary{e.m.adjoint(), e.products_since_renorm};
            }
        },
        g);
}

double distance(const GroupElement& a, const GroupElement& b) {
    if (!same_group(a, b)) mixed_group_error(a, b);
    if (const auto* ra = std::get_if<RealVec>(&a))
        return (ra->v - std::get<RealVec>(b).v).norm();
    if (const auto* ca = std::get_if<Circle>(&a)) {
        double d = std::fabs(ca->turns - std::get<Circle>(b).turns);
        return std::min(d, 1.0 - d);
    }
    // d(g,h) = ||Log(g h*)||_F.  g h* is unitary, hence normal; its principal
    // log has Frobenius norm sqrt(sum theta_j^2) with theta_j the eigenvalue
    // arguments in (-pi, pi].
    const auto& ua = std::get<Unitary>(a);
    const auto& ub = std::get<Unitary>(b);
    Eigen::MatrixXcd rel = ua.m * ub.m.adjoint();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(rel, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("unitary distance: eigensolver failed");
    double sumsq = 0.0;
    for (long j = 0; j < es.eigenvalues().size(); ++j) {
        std::complex<double> lam = es.eigenvalues()[j];
        if (std::abs(lam + 1.0) < Unitary::kUnitaryTol)
            throw std::domain_error(
                "unitary distance: antipodal pair (eigenvalue -1 of g h*), principal log "
                "undefined");
        double theta = std::arg(lam);
        sumsq += theta * theta;
    }
    return std::sqrt(sumsq);
}

double ad_norm(const GroupElement& g) {
    const auto* u = std::get_if<Unitary>(&g);
    if (u == nullptr) return 1.0;  // abelian: Ad == id

    // Orthonormal real basis of skew-Hermitian d x d matrices under
    // <A,B> = Re tr(A* B): i E_jj, (E_jk - E_kj)/sqrt2, i(E_jk + E_kj)/sqrt2.
    const long d = u->m.rows();
    const long dim = d * d;
    std::vector<Eigen::MatrixXcd> basis;
    basis.reserve(static_cast<std::size_t>(dim));
    const std::complex<double> I(0.0, 1.0);
    const double s = 1.0 / std::sqrt(2.0);
    for (long j = 0; j < d; ++j) {
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(d, d);
        e(j, j) = I;
        basis.push_back(e);
    }
    for (long j = 0; j < d; ++j) {
        for (long k = j + 1; k < d; ++k) {
            Eigen::MatrixXcd e1 = Eigen::MatrixXcd::Zero(d, d);
            e1(j, k) = s;
            e1(k, j) = -s;
            basis.push_back(e1);
            Eigen::MatrixXcd e2 = Eigen::MatrixXcd::Zero(d, d);
            e2(j, k) = I * s;
            e2(k, j) = I * s;
            basis.push_back(e2);
        }
    }
    Eigen::MatrixXd op(dim, dim);
    for (long c = 0; c < dim; ++c) {
        Eigen::MatrixXcd img = u->m * basis[static_cast<std::size_t>(c)] * u->m.adjoint();
        for (long r = 0; r < dim; ++r) {
            std::complex<double> ip =
                (basis[static_cast<std::size_t>(r)].adjoint() * img).trace();
            op(r, c) = ip.real();
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(op);
    return svd.singularValues()(0);
}

double unitary_defect(const GroupElement& g) {
    const auto* u = std::get_if<Unitary>(&g);
    return u == nullptr ? 0.0 : unitary_defect_of(u->m);
}

// ── metric object ───────────────────────────────────────────────────────────

double GroupMetric::right_invariance_defect(const GroupElement& g, const GroupElement& h,
                                            const GroupElement& k) const {
    return std::fabs(distance(multiply(g, k), multiply(h, k)) - distance(g, h));
}

double GroupMetric::ad_inequality_defect(const GroupElement& g, const GroupElement& h,
                                         const GroupElement& k) const {
    double lhs = distance(multiply(g, h), multiply(g, k));
    double rhs = ad_norm(g) * distance(h, k);
    return std::max(0.0, lhs - rhs);
}

// ── twists ──────────────────────────────────────────────────────────────────

TwistSpec frequency_twist(double alpha_turns, std::vector<double> freq) {
    TwistSpec t;
    t.alpha_turns = wrap_turns(alpha_turns);
    t.character = [freq = std::move(freq)](const GroupElement& g) {
        const auto* r = std::get_if<RealVec>(&g);
        if (r == nullptr || static_cast<std::size_t>(r->v.size()) != freq.size())
            throw std::invalid_argument("frequency character expects RealVec of matching dim");
        double s = 0.0;
        for (long j = 0; j < r->v.size(); ++j) s += freq[static_cast<std::size_t>(j)] * r->v[j];
        return wrap_turns(s);
    };
    return t;
}

TwistSpec winding_twist(double alpha_turns, int winding) {
    TwistSpec t;
    t.alpha_turns = wrap_turns(alpha_turns);
    t.character = [winding](const GroupElement& g) {
        const auto* c = std::get_if<Circle>(&g);
        if (c == nullptr) throw std::invalid_argument("winding character expects Circle");
        return wrap_turns(winding * c->turns);
    };
    return t;
}

TwistSpec determinant_twist(double alpha_turns) {
    TwistSpec t;
    t.alpha_turns = wrap_turns(alpha_turns);
    t.character = [](const GroupElement& g) {
        const auto* u = std::get_if<Unitary>(&g);
        if (u == nullptr) throw std::invalid_argument("determinant character expects Unitary");
        return wrap_turns(std::arg(u->m.determinant()) / (2.0 * M_PI));
    };
    return t;
}

// ── deterministic sampler ───────────────────────────────────────────────────

GroupSampler::GroupSampler(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

double GroupSampler::next_uniform() {
    // splitmix64; plenty for test-point generation and fully reproducible.
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

double GroupSampler::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
}

GroupElement GroupSampler::realvec(int dim) {
    RealVec r;
    r.v.resize(dim);
    for (int j = 0; j < dim; ++j) r.v[j] = next_gaussian();
    return r;
}

GroupElement GroupSampler::circle() { return Circle{next_uniform()}; }

GroupElement GroupSampler::unitary(int dim) {
    Eigen::MatrixXcd a(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) a(r, c) = std::complex<double>(next_gaussian(), next_gaussian());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    Eigen::MatrixXcd q = qr.householderQ();
    // Fix the phase ambiguity of QR so the distribution does not depend on
    // Eigen internals: scale columns by the conjugate phase of R's diagonal.
    Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < dim; ++c) {
        std::complex<double> d = r(c, c);
        if (std::abs(d) > 0) q.col(c) *= d / std::abs(d);
    }
    return make_unitary(q);
}

}  // namespace livsic
