#pragma once
#include "histoport/fields.hpp"

namespace histoport {

/// a_0 + sum_j a_j cos(j g) + b_j sin(j g) for coeffs laid out
/// [a0, a1, b1, a2, b2, ...].
double sample_so2_signal(const std::vector<double>& coeffs, double angle);

/// Orientation histograms from a coefficient field: per pixel, evaluate the
/// band-limited signal at the N grid angles (rows of the discretization
/// matrix) and softmax over the N bins.  Input (1+2jc, H, W), output (N, H, W)
/// carrying the regular rep of C_N.  With quotient=true the input is a
/// quotient coefficient field and the output has N/2 bins over [0, pi).
Tensor generate_eoh(const Tensor& coeff_field, int n, bool quotient = false);

/// Keep the C_M-angle subset of group channels: bins {0, N/M, 2N/M, ...}.
/// No renormalization.
Tensor subsample_group(const Tensor& map, int m);

/// Eq.-style alignment stack: for i in [0, N), rotate the crop's EOH map by
/// the group element g_i (spatial bilinear rotation + cyclic channel shift by
/// i) and subsample to M channels.  crop h x w must be odd.  Output
/// (N, M, h, w) flattened as (N*M, h, w) rows-major in i.
Tensor subgroup_alignment(const Tensor& crop_map, int m);

/// Alignment for rotation-invariant descriptors: spatial rotation only, all
/// channels kept.  Output (N*C, h, w).
Tensor invariant_alignment(const Tensor& crop_map, int n);

}  // namespace histoport
