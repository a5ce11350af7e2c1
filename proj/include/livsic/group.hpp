#pragma once
// Group elements for cocycle arithmetic over interval maps.
//
// Three concrete groups cover the additive, circle and unitary cases:
//
//   RealVec   (R^d, +)    abelian, d(a,b) = |a - b|_2
//   Circle    (R/Z, +)    abelian, angles stored in turn units [0,1),
//                         d(a,b) = min(|a-b|, 1-|a-b|)
//   Unitary   (U(d), *)   d(g,h) = Frobenius norm of the principal matrix
//                         logarithm of g h*
//
// The metric is right invariant in every case: d(gk, hk) = d(g, h).
// Left translation is controlled by ad_norm(g), the operator norm of
// v -> g v g^-1 on the tangent space at the identity, through
//
//   d(gh, gk) <= ad_norm(g) * d(h, k).
//
// Both abelian groups have ad_norm == 1 exactly; U(d) has ad_norm == 1
// because conjugation by a unitary preserves the Frobenius norm.  That
// constant is what telescoping bounds in the reconstruction consume.

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace livsic {

// ── element types ───────────────────────────────────────────────────────────

struct RealVec {
    Eigen::VectorXd v;
};

struct Circle {
    double turns = 0.0;  // invariant: 0 <= turns < 1
};

struct Unitary {
    Eigen::MatrixXcd m;
    // Multiplications since the last re-orthonormalization.  Products are
    // re-projected onto U(d) every kRenormEvery multiplications so that
    // drift stays below 1e-8 over 1e6 multiplications.
    int products_since_renorm = 0;

    static constexpr int kRenormEvery = 64;
    static constexpr double kUnitaryTol = 1e-12;
};

using GroupElement = std::variant<RealVec, Circle, Unitary>;

// ── constructors ────────────────────────────────────────────────────────────

GroupElement make_realvec(std::vector<double> coords);
GroupElement make_real(double x);             // R^1 shorthand
GroupElement make_circle(double turns);       // reduced mod 1
// Throws std::invalid_argument unless ||m m* - I||_F <= kUnitaryTol.
GroupElement make_unitary(Eigen::MatrixXcd m);

GroupElement identity_like(const GroupElement& g);
bool same_group(const GroupElement& a, const GroupElement& b);
std::string group_name(const GroupElement& g);

// ── group operations ────────────────────────────────────────────────────────

GroupElement multiply(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& g);

// Right-invariant distance.  Unitary: throws std::domain_error when g h*
// has an eigenvalue within 1e-12 of -1 (antipodal pair, no principal log).
double distance(const GroupElement& a, const GroupElement& b);

// ||Ad(g)||: operator norm of v -> g v g^-1 on the tangent space at e.
// RealVec/Circle return exactly 1.  Unitary computes the largest singular
// value of the conjugation operator restricted to skew-Hermitian matrices
// (dimension d^2 over R); the result is 1 up to roundoff.
double ad_norm(const GroupElement& g);

// Unitarity drift ||m m* - I||_F; 0 for the abelian variants.
double unitary_defect(const GroupElement& g);

// ── metric object ───────────────────────────────────────────────────────────

// Thin wrapper exposing the metric together with its testable properties.
struct GroupMetric {
    double operator()(const GroupElement& a, const GroupElement& b) const {
        return distance(a, b);
    }
    // |d(gk,hk) - d(g,h)|; zero in exact arithmetic.
    double right_invariance_defect(const GroupElement& g, const GroupElement& h,
                                   const GroupElement& k) const;
    // max(0, d(gh,gk) - ad_norm(g)*d(h,k)); never positive in exact arithmetic.
    double ad_inequality_defect(const GroupElement& g, const GroupElement& h,
                                const GroupElement& k) const;
};

// ── twists ──────────────────────────────────────────────────────────────────

// A circle twist e^{2 pi i alpha} chi(g): alpha in turn units plus a
// character chi: G -> R/Z (also in turns).
struct TwistSpec {
    double alpha_turns = 0.0;
    std::function<double(const GroupElement&)> character;
};

// chi(v) = <freq, v> mod 1 on R^d.
TwistSpec frequency_twist(double alpha_turns, std::vector<double> freq);
// chi(t) = k t mod 1 on the circle.
TwistSpec winding_twist(double alpha_turns, int winding);
// chi(U) = arg det(U) / 2pi on U(d).
TwistSpec determinant_twist(double alpha_turns);

// ── deterministic random elements (test/experiment support) ────────────────

struct GroupSampler {
    explicit GroupSampler(std::uint64_t seed);
    GroupElement realvec(int dim);
    GroupElement circle();
    GroupElement unitary(int dim);  // Haar-like via QR of a Gaussian matrix

  private:
    std::uint64_t state_;
    double next_gaussian();
    double next_uniform();
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace livsic
