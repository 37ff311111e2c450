#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mflab/vec.hpp"

namespace mflab {

enum class KernelVariant { BoundedLipschitz, Newton, Coulomb, Vortex };

/// Interaction kernel descriptor. Bounded-Lipschitz families are addressed by
/// string id ("zero", "tanh-gauss"); Newton/Coulomb are the attractive and
/// repulsive gradients of the fundamental potential.
struct KernelSpec {
    int dim = 1;
    KernelVariant variant = KernelVariant::BoundedLipschitz;
    std::string family = "zero";
    double lipschitz_bound = 0.0;            // L_F, infinite for singular variants
    double sup_bound = 0.0;                  // sup |F0|, infinite for singular variants
    std::optional<double> regularity_bound;  // U_F metadata, when known
    bool odd = true;

    bool singular() const { return variant != KernelVariant::BoundedLipschitz; }

    static KernelSpec from_id(const std::string& id, int dim);
    static const std::vector<std::string>& known_ids();
};

// Volume of the unit ball in R^d.
double unit_ball_volume(int dim);

// Constant of the fundamental potential for d >= 3: 1 / (d (d-2) alpha_d).
double newton_constant(int dim);

// Fundamental potential: -(1/2pi) ln|x| for d = 2, C_d |x|^{2-d} for d >= 3.
// Domain error at x = 0.
double eval_potential(const Vec& x, int dim);

// Kernel velocity at x. Domain error at x = 0 for singular variants.
Vec eval_kernel(const KernelSpec& spec, const Vec& x);

/// Radial mollifier C (1 + cos pi|x|)^{d+2} on |x| <= 1, scaled to width delta.
struct MollifierSpec {
    int dim = 1;
    double delta = 1.0;
    double normalization = 0.0;  // C with integral of psi equal to 1
};

// Normalization constant C for dimension d, by radial quadrature.
double psi_normalization(int dim);

MollifierSpec make_mollifier(int dim, double delta);

// Unit-width profile  C (1 + cos pi|x|)^{d+2}, zero outside |x| <= 1.
double eval_psi(const Vec& x, int dim, double normalization);

// Width-delta rescaling  delta^{-d} psi(x / delta).
double eval_psi_scaled(const Vec& x, const MollifierSpec& moll);

/// Blob: tensor product of 1-D bumps b(u) = c exp(-1/(1-(2u)^2)) on |u| < 1/2,
/// rescaled to width epsilon. Smooth, unit mass, support {|x|_inf <= eps/2}.
struct BlobSpec {
    int dim = 1;
    double epsilon = 1.0;

    double profile_normalization = 0.0;  // c
    double profile_sup = 0.0;            // ||b||_inf
    double profile_grad_sup = 0.0;       // ||b'||_inf
    double profile_l2_sq = 0.0;          // ||b||_2^2
    double profile_grad_l2_sq = 0.0;     // ||b'||_2^2

    double sup() const;            // ||phi||_inf
    double partial_sup() const;    // max_k ||d phi / dx_k||_inf
    double l2_sq() const;          // ||phi||^2
    double grad_l2_sq() const;     // ||grad phi||^2
};

BlobSpec make_blob(int dim, double epsilon);

// 1-D profile b(u), unit width.
double blob_profile(double u, const BlobSpec& blob);
double blob_profile_deriv(double u, const BlobSpec& blob);

// Rescaled blob  eps^{-d} phi(x / eps).
double eval_blob(const Vec& x, const BlobSpec& blob);

/// F0 * psi_delta. Singular variants use a radial coefficient table built from
/// the enclosed-mass flux identity (4096 nodes, cubic interpolation) and the
/// exact far-field form outside the mollifier support; bounded variants use
/// tensor quadrature over the support. Immutable after construction.
class MollifiedKernel {
  public:
    MollifiedKernel(const KernelSpec& spec, const MollifierSpec& moll);

    Vec eval(const Vec& x) const;

    const KernelSpec& spec() const { return spec_; }
    const MollifierSpec& mollifier() const { return moll_; }
    bool tabulated() const { return !coef_.empty(); }

    // sup over r of the radial speed |F_{0,delta}(r)| (singular variants).
    double radial_sup() const;

    // CSV rows "radius,value" of the radial speed m(r) on [0, 2 delta].
    void write_radial_csv(std::ostream& os) const;

  private:
    double coef_at(double scaled_radius) const;

    KernelSpec spec_;
    MollifierSpec moll_;
    std::vector<double> coef_;  // dimensionless radial coefficient on [0, 1]
};

// Direct quadrature of (F0 * psi_delta)(x); slow, used as an independent check.
Vec mollified_kernel_quadrature(const KernelSpec& spec, const MollifierSpec& moll,
                                const Vec& x, int points_per_axis = 48);

}  // namespace mflab
