#include "tfns/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <utility>

namespace tfns {

namespace {

// Trigonometric interpolant of a real periodic sequence; evaluates the value
// and the y-derivative at arbitrary points.  The unpaired Nyquist mode keeps
// its cosine in the value and contributes no derivative (the same convention
// the grid's spectral derivative uses).
class TrigSeries {
 public:
  TrigSeries(const std::vector<double>& samples, double period)
      : n_(static_cast<int>(samples.size())), omega_(kTwoPi / period) {
    coef_.resize(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < n_; ++j) {
        const double phase = -kTwoPi * k * j / n_;
        acc += samples[j] * std::complex<double>(std::cos(phase), std::sin(phase));
      }
      coef_[k] = acc / static_cast<double>(n_);
    }
  }

  double value(double y) const {
    double acc = coef_[0].real();
    for (int k = 1; k < n_ / 2; ++k) {
      const double th = k * omega_ * y;
      acc += 2.0 * (coef_[k].real() * std::cos(th) - coef_[k].imag() * std::sin(th));
    }
    acc += coef_[n_ / 2].real() * std::cos((n_ / 2) * omega_ * y);
    return acc;
  }

  double derivative(double y) const {
    double acc = 0.0;
    for (int k = 1; k < n_ / 2; ++k) {
      const double th = k * omega_ * y;
      const double w = k * omega_;
      acc += -2.0 * w * (coef_[k].real() * std::sin(th) + coef_[k].imag() * std::cos(th));
    }
    return acc;
  }

 private:
  int n_;
  double omega_;
  std::vector<std::complex<double>> coef_;
};

// Margin evaluated without a floor, for diagnostics and dump messages.
double raw_margin(const Field& v, const NonlinOptions& base) {
  NonlinOptions opt = base;
  opt.margin_floor = -1e300;
  return compute_FG(v, opt).margin;
}

std::string blow_up_message(const char* what, double t, double margin, double floor,
                            double scale) {
  std::ostringstream os;
  os << what << " at t = " << t << ": gradient margin " << margin << " (floor " << floor
     << "), max |v| = " << scale;
  return os.str();
}

// Trapezoid in t over [t_0, t_M] of the per-slice contributions c_1..c_M
// (one per completed step of size dt); the backward difference leaves no
// integrand at t_0, so that endpoint extends c_1.
double trapezoid_accum(const std::vector<double>& c, double dt) {
  if (c.empty()) return 0.0;
  double total = 0.5 * (c.front() - c.back());
  for (double v : c) total += v;
  return dt * total;
}

}  // namespace

double SolverConfig::effective_delta() const {
  return delta == 0.0 ? default_delta() : delta;
}

NormParams SolverConfig::norm_params() const {
  // Diagnostic norms run with reduced derivative counts: above stencil order
  // 8 the composed first-derivative passes amplify per-step solver roundoff
  // (relative residual ~1e-14) past the physical content, and the analysis
  // counts (19/13/13/4) measure nothing but that noise on evolving states.
  // The reduced set keeps every addend inside the direct-stencil range.
  NormParams p;
  p.k = 8;
  p.k_tilde = 6;
  p.k_check = 6;
  p.k_breve = 3;
  p.delta = delta;
  return p;
}

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("solver config: dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end))
    throw ConfigError("solver config: t_end must be positive");
  if (picard_iters < 1) throw ConfigError("solver config: picard_iters must be >= 1");
  if (output_every < 1) throw ConfigError("solver config: output_every must be >= 1");
  if (!(margin_floor < 1.0))
    throw ConfigError("solver config: margin_floor must lie below 1 (the flat-state margin)");
  const double delta_max = 0.5 * (beta_constant() - 0.5);
  if (delta < 0.0 || delta > delta_max)
    throw ConfigError("solver config: delta must lie in (0, (beta - 1/2)/2] (0 = default)");
}

Stepper::Stepper(const GridSpec& grid, const SolverConfig& cfg)
    : grid_(grid), cfg_(cfg), norms_(cfg.norm_params()) {
  grid_.validate();
  cfg_.validate();
  validate_norm_params(norms_, false);
  const double lambda = 1.0 / cfg_.dt;
  systems_.reserve(grid_.n_y / 2 + 1);
  for (int k = 0; k <= grid_.n_y / 2; ++k)
    systems_.push_back(assemble(grid_, kTwoPi * k / grid_.y_period, lambda));
}

SimState Stepper::make_state(const Field& v) const {
  require_same_grid(v.grid, grid_, "stepper state");
  SimState st;
  st.t = v.time;
  st.v = v;
  st.traces = extract_traces(v);
  st.contact_line.resize(grid_.n_y);
  for (int j = 0; j < grid_.n_y; ++j) st.contact_line[j] = -0.375 * st.t + st.traces.v0[j];
  st.diagnostics["margin"] = raw_margin(v, cfg_.nonlin());
  st.diagnostics["max_abs"] = max_abs(v);
  st.diagnostics["trace_fit_residual"] = st.traces.fit_residual;
  return st;
}

Field Stepper::implicit_solve(const Field& rhs, double* max_residual) const {
  require_same_grid(rhs.grid, grid_, "implicit solve");
  const SpectralField rh = fourier_y(rhs);
  SpectralField vh(grid_, rhs.time);
  double worst = 0.0;
  Profile fre, fim;
  fre.s_min = fim.s_min = grid_.s_min;
  fre.ds = fim.ds = grid_.ds();
  fre.values.resize(grid_.n_s);
  fim.values.resize(grid_.n_s);
  for (int j = 0; j < grid_.n_y; ++j) {
    const int k = std::abs(grid_.mode_number(j));
    const ResolventSystem& sys = systems_[k];
    for (int i = 0; i < grid_.n_s; ++i) {
      fre.values[i] = rh.at(i, j).real();
      fim.values[i] = rh.at(i, j).imag();
    }
    SolveReport rep_re, rep_im;
    const Profile ure = solve(sys, fre, &rep_re);
    const Profile uim = solve(sys, fim, &rep_im);
    worst = std::max({worst, rep_re.residual, rep_im.residual});
    for (int i = 0; i < grid_.n_s; ++i) vh.at(i, j) = {ure.values[i], uim.values[i]};
  }
  if (max_residual) *max_residual = worst;
  return inverse_fourier_y(vh);
}

SimState Stepper::step(const SimState& state, const StepHooks& hooks) const {
  require_same_grid(state.v.grid, grid_, "step");
  const double dt = cfg_.dt;
  const double t_new = state.t + dt;
  const NonlinOptions opt = cfg_.nonlin();

  Field rhs_base(grid_, t_new);
  for (int i = 0; i < grid_.n_s; ++i) {
    const double w = grid_.x(i) / dt;
    for (int j = 0; j < grid_.n_y; ++j) rhs_base.at(i, j) = w * state.v.at(i, j);
  }
  Field force;
  if (hooks.forcing) {
    force = hooks.forcing(t_new, grid_);
    require_same_grid(force.grid, grid_, "step forcing");
  }

  Field v_guess = state.v;
  Field v_new;
  double worst_res = 0.0, picard_delta = 0.0;
  for (int m = 1; m <= cfg_.picard_iters; ++m) {
    Field rhs = rhs_base;
    if (!hooks.zero_nonlinearity) {
      try {
        rhs = rhs + nonlin_N(v_guess, opt);
      } catch (const MarginError&) {
        throw BlowUpError(blow_up_message("gradient margin lost mid-step", t_new,
                                          raw_margin(v_guess, opt), cfg_.margin_floor,
                                          max_abs(v_guess)));
      }
    }
    if (hooks.forcing) rhs = rhs + force;
    double res = 0.0;
    v_new = implicit_solve(rhs, &res);
    worst_res = std::max(worst_res, res);
    if (m >= 2) picard_delta = max_abs(v_new - v_guess);
    v_guess = v_new;
  }
  v_new.time = t_new;

  if (!all_finite(v_new))
    throw BlowUpError(blow_up_message("state lost finiteness", t_new, 0.0, cfg_.margin_floor,
                                      std::numeric_limits<double>::infinity()));
  const double margin = raw_margin(v_new, opt);
  if (margin <= cfg_.margin_floor)
    throw BlowUpError(blow_up_message("gradient margin lost", t_new, margin, cfg_.margin_floor,
                                      max_abs(v_new)));

  SimState out;
  out.t = t_new;
  out.v = std::move(v_new);
  out.traces = extract_traces(out.v);
  out.contact_line.resize(grid_.n_y);
  for (int j = 0; j < grid_.n_y; ++j) out.contact_line[j] = -0.375 * t_new + out.traces.v0[j];
  out.diagnostics["margin"] = margin;
  out.diagnostics["max_abs"] = max_abs(out.v);
  out.diagnostics["trace_fit_residual"] = out.traces.fit_residual;
  out.diagnostics["solve_residual"] = worst_res;
  if (cfg_.picard_iters >= 2) out.diagnostics["picard_delta"] = picard_delta;
  return out;
}

RunResult Stepper::run(const Field& v0, const StepHooks& hooks) const {
  require_same_grid(v0.grid, grid_, "run");
  const long long steps = std::max<long long>(1, std::llround(cfg_.t_end / cfg_.dt));

  RunResult res;
  SimState cur = make_state(v0);
  if (cur.diagnostics.at("margin") <= cfg_.margin_floor)
    throw MarginError("run: initial state already violates the gradient-margin floor");
  // The leading members |Dx v|_{k~,-delta} and |Dy q~(Dx)Dx v|_{k(breve),2-delta}
  // stay signal-dominated on fine grids where the composite saturates at the
  // roundoff floor of the strongly weighted high-derivative addends.
  const auto decorate_init = [this](SimState& st, double* composite, double* lead) {
    const auto a = norm_init_addends(st.v, norms_);
    double total = 0.0;
    for (double term : a) total += term;
    st.diagnostics["norm_init"] = std::sqrt(total);
    st.diagnostics["norm_init_lead"] = std::sqrt(a[1] + a[5]);
    if (composite) *composite = st.diagnostics["norm_init"];
    if (lead) *lead = st.diagnostics["norm_init_lead"];
  };
  decorate_init(cur, &res.norm_init0, &res.norm_init_lead0);
  cur.diagnostics["norm_sol_contribution"] = 0.0;
  cur.diagnostics["norm_sol_accum"] = 0.0;
  cur.diagnostics["norm_sol_lead_accum"] = 0.0;
  res.snapshots.push_back(cur);

  std::vector<double> contributions, lead_contributions;
  contributions.reserve(static_cast<std::size_t>(steps));
  lead_contributions.reserve(static_cast<std::size_t>(steps));
  const auto decorate_sol = [&](SimState& st) {
    st.diagnostics["norm_sol_contribution"] = contributions.back();
    st.diagnostics["norm_sol_accum"] = std::sqrt(trapezoid_accum(contributions, cfg_.dt));
    st.diagnostics["norm_sol_lead_accum"] =
        std::sqrt(trapezoid_accum(lead_contributions, cfg_.dt));
  };
  bool last_snapshotted = true;
  for (long long m = 1; m <= steps; ++m) {
    SimState nxt;
    try {
      nxt = step(cur, hooks);
    } catch (const BlowUpError& e) {
      res.blew_up = true;
      res.blow_up_reason = e.what();
      break;
    }
    const auto sol = norm_sol_addends(nxt.v, cur.v, cfg_.dt, norms_);
    double sol_total = 0.0;
    for (double term : sol) sol_total += term;
    contributions.push_back(sol_total);
    lead_contributions.push_back(sol[1] + sol[5]);
    cur = std::move(nxt);
    res.steps_taken = static_cast<int>(m);
    last_snapshotted = false;
    if (m % cfg_.output_every == 0 || m == steps) {
      decorate_init(cur, nullptr, nullptr);
      decorate_sol(cur);
      res.snapshots.push_back(cur);
      last_snapshotted = true;
    }
  }
  if (!last_snapshotted) {
    decorate_init(cur, nullptr, nullptr);
    if (!contributions.empty()) decorate_sol(cur);
    res.snapshots.push_back(cur);
  }
  res.final_state = std::move(cur);
  res.norm_sol_accum = std::sqrt(trapezoid_accum(contributions, cfg_.dt));
  res.bound_constant = res.norm_init0 > 0.0 ? res.norm_sol_accum / res.norm_init0 : 0.0;
  res.norm_sol_lead_accum = std::sqrt(trapezoid_accum(lead_contributions, cfg_.dt));
  res.bound_constant_lead =
      res.norm_init_lead0 > 0.0 ? res.norm_sol_lead_accum / res.norm_init_lead0 : 0.0;
  return res;
}

SimState step(const SimState& state, const SolverConfig& cfg) {
  return Stepper(state.v.grid, cfg).step(state);
}

RunResult run(const Field& v0, const SolverConfig& cfg) { return Stepper(v0.grid, cfg).run(v0); }

ContactCurve advect_contact_line(const SimState& state, double dt, const ContactCurve* start) {
  const int n = static_cast<int>(state.traces.v0.size());
  if (n < 2 || n % 2 != 0 || state.traces.v1.size() != state.traces.v0.size())
    throw ConfigError("advect_contact_line: traces need matching even-length v0 and v1");
  const double period = state.v.grid.y_period;
  const TrigSeries v0s(state.traces.v0, period);
  const TrigSeries v1s(state.traces.v1, period);

  ContactCurve cur;
  if (start) {
    if (start->y.size() != start->z.size() || start->y.empty())
      throw ConfigError("advect_contact_line: start curve needs matching nonempty Y and Z");
    cur = *start;
  } else {
    if (static_cast<int>(state.contact_line.size()) != n)
      throw ConfigError("advect_contact_line: contact_line out of sync with traces");
    cur.y.resize(n);
    cur.z = state.contact_line;
    for (int j = 0; j < n; ++j) cur.y[j] = period * j / n;
  }

  ContactCurve out = cur;
  for (std::size_t p = 0; p < cur.y.size(); ++p) {
    const double g = v0s.derivative(cur.y[p]);
    const double b = 1.0 + v1s.value(cur.y[p]);
    if (b <= 0.0)
      throw MarginError("advect_contact_line: 1 + v1 is not positive at a curve point");
    const double amp = 0.375 * (1.0 + g * g) / (b * b * b);
    out.y[p] = cur.y[p] + dt * amp * g;
    out.z[p] = cur.z[p] - dt * amp;
  }
  return out;
}

}  // namespace tfns
