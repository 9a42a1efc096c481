#pragma once
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tfns/grid.hpp"
#include "tfns/nonlinearity.hpp"
#include "tfns/norms.hpp"
#include "tfns/resolvent.hpp"

namespace tfns {

// Semi-implicit (IMEX) time integration of the evolution
//
//   x dv/dt + L v = N(v),    L = q(Dx) + Dy^2 r(Dx) + Dy^4,
//
// with the linear part implicit through per-y-mode resolvent solves
// (lambda = 1/dt) and the nonlinearity explicit, refreshed by a fixed number
// of Picard passes within each step:
//
//   (x/dt) v_new + L v_new = (x/dt) v_old + N(v_guess),
//
// where v_guess is v_old on the first pass and the previous iterate after.

struct SolverConfig {
  double dt = 1e-2;         // uniform step size
  double t_end = 1.0;       // final time for run()
  int picard_iters = 2;     // explicit-part refreshes per step (>= 1)
  double margin_floor = 0.1;  // forwarded to the nonlinearity margin guard
  double delta = 0.0;       // norm weight; 0 means default_delta()
  int output_every = 10;    // snapshot cadence of run(), in steps
  bool dealias = true;      // 2/3-rule on pointwise products

  double effective_delta() const;
  NonlinOptions nonlin() const { return NonlinOptions{margin_floor, dealias}; }
  // Norm parameters used for run diagnostics: this delta with derivative
  // counts reduced to the direct-stencil range (8/6/6/3), where the norms
  // measure the state rather than amplified solver roundoff.
  NormParams norm_params() const;
  void validate() const;  // throws ConfigError naming the violation
};

struct SimState {
  double t = 0.0;
  Field v;
  TraceSet traces;
  std::map<std::string, double> diagnostics;
  // Contact-line position per y-node: Z0(t, y) = -(3/8) t + v0(y).
  std::vector<double> contact_line;
};

// Optional per-step modifiers, used by verification drivers: integrate only
// the linear flow, or append a known forcing g(t_new) to the right-hand side
// (manufactured solutions).
struct StepHooks {
  bool zero_nonlinearity = false;
  std::function<Field(double t_new, const GridSpec&)> forcing;
};

struct RunResult {
  // States at the output cadence: the initial state, every output_every-th
  // step, and the last computed state.  Diagnostics of these snapshots
  // additionally carry the (expensive) composite norms.
  std::vector<SimState> snapshots;
  SimState final_state;
  int steps_taken = 0;
  bool blew_up = false;
  std::string blow_up_reason;

  // Composite norms (all addends).  On fine grids the strongly weighted
  // high-derivative addends amplify per-step solver roundoff and these
  // figures saturate at a resolution-dependent noise floor; they are logged
  // for completeness, while the *_lead figures below stay signal-dominated.
  double norm_init0 = 0.0;       // composite initial norm of v0
  double norm_sol_accum = 0.0;   // time-accumulated solution norm of the run
  double bound_constant = 0.0;   // norm_sol_accum / norm_init0 (0 when v0 = 0)

  // Leading measurable members of the same norm families: the initial-norm
  // addends |Dx v|_{k~,-delta} and |Dy q~(Dx)Dx v|_{k(breve),2-delta}, and the
  // matching time-derivative addends of the solution norm.
  double norm_init_lead0 = 0.0;
  double norm_sol_lead_accum = 0.0;
  double bound_constant_lead = 0.0;
};

// Contact-line curve advected as an ODE system: one (Y, Z) pair per tracked
// point (initially the grid's y-nodes).
struct ContactCurve {
  std::vector<double> y, z;
};

// Integrator with its per-mode factorizations pre-assembled.  All methods are
// const and deterministic: identical inputs give bit-identical outputs (the
// per-mode solves are independent and combined in a fixed order).
class Stepper {
 public:
  // Assembles and factorizes one resolvent system per distinct |eta|
  // (modes 0 .. n_y/2) with lambda = 1/dt.  Throws ConfigError on a bad
  // config, GridError on a bad grid; assembly failures propagate.
  Stepper(const GridSpec& grid, const SolverConfig& cfg);

  const GridSpec& grid() const { return grid_; }
  const SolverConfig& config() const { return cfg_; }

  // Wrap a field (time taken from v.time) into a state with fresh traces,
  // contact line, and cheap diagnostics (margin, max_abs, trace residual).
  SimState make_state(const Field& v) const;

  // One implicit step from state.t to state.t + dt.  Throws BlowUpError when
  // the gradient margin falls through the floor mid-step or the update loses
  // finiteness; the message records t, the margin, and the state scale.
  // Resolvent failures propagate as SolveError.
  SimState step(const SimState& state, const StepHooks& hooks = {}) const;

  // Integrate round(t_end/dt) uniform steps from v0 (v0.time is the start
  // time).  Records snapshots at the output cadence, accumulates the
  // solution norm (trapezoid in t of the per-slice contributions), and on
  // blow-up stops early, returning everything computed so far together with
  // the reason.  Norm bookkeeping uses norm_params().
  RunResult run(const Field& v0, const StepHooks& hooks = {}) const;

  // Solve (x/dt) u + L u = rhs for u (the implicit stage used by step).
  // When max_residual is given it receives the worst per-mode solve residual.
  Field implicit_solve(const Field& rhs, double* max_residual = nullptr) const;

 private:
  GridSpec grid_;
  SolverConfig cfg_;
  NormParams norms_;
  std::vector<ResolventSystem> systems_;  // index = |mode number|
};

// One-shot conveniences; each assembles a fresh Stepper (callers advancing
// many steps should hold a Stepper to reuse its factorizations).
SimState step(const SimState& state, const SolverConfig& cfg);
RunResult run(const Field& v0, const SolverConfig& cfg);

// One forward-Euler update of the contact-line ODE dY/dt = V0_y, dZ/dt = V0_z
// with the leading-order interface velocity evaluated from state.traces
// (trigonometric interpolation off the y-nodes).  When start is null the
// curve begins on the grid's y-nodes with Z = state.contact_line.  Throws
// MarginError when the traces put 1 + v1 at or below zero at a curve point.
ContactCurve advect_contact_line(const SimState& state, double dt,
                                 const ContactCurve* start = nullptr);

}  // namespace tfns
