#pragma once

#include <utility>

#include "tfns/errors.hpp"
#include "tfns/grid.hpp"
#include "tfns/polyops.hpp"

namespace tfns {

// Pointwise hodograph-gradient data entering the composed spatial operator.
struct FGPair {
  Field F;              // (1 + v_x)^{-1}
  Field G;              // v_y (1 + v_x)^{-1}
  double margin = 0.0;  // min over the grid of 1 + v_x
};

struct NonlinOptions {
  double margin_floor = 0.1;  // reject states whose gradient closes the transform
  bool dealias = true;        // 2/3-rule cut in y after each pointwise field product
};

// Fails with MarginError when min(1 + v_x) <= margin_floor: the coordinate
// change behind the formulation is no longer safely invertible.
FGPair compute_FG(const Field& v, const NonlinOptions& opt = {});

// The 4-linear building block x H1 (Dx+3/2)[H2 (Dx-1/2)[H3 (Dx+1/2)[H4]]].
Field quadlinear_M(const Field& h1, const Field& h2, const Field& h3, const Field& h4,
                   bool dealias = true);

// F^{-1}(A1 + A2) applied to the field B1 - B2, the spatial operator of the
// evolution written in the moving frame; constant 3/8 at v = 0.
Field transformed_spatial(const Field& v, const NonlinOptions& opt = {});

// L = q(Dx) + Dy^2 r(Dx) + Dy^4, physical and per-mode spectral forms.
Field linear_op(const Field& v);
SpectralField linear_op(const SpectralField& v);

// N(v) = -x * transformed_spatial(v) + (3/8) x + L v.
Field nonlin_N(const Field& v, const NonlinOptions& opt = {});

// Decomposition N = N1 + N2: N1 carries every y-coupled contribution, N2 the
// purely x-directional part assembled from the 4-linear form plus q(Dx)v + (3/8)x.
std::pair<Field, Field> nonlin_N_split(const Field& v, const NonlinOptions& opt = {});

}  // namespace tfns
