#include "blockade/analytics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace blockade {

Betas betas(double eta, double eta_a) {
  Betas b;
  const double e2 = eta * eta, a2 = eta_a * eta_a;
  b.beta1 = std::sqrt(a2 + e2);
  b.D = std::sqrt(a2 * a2 + 26.0 * a2 * e2 + 25.0 * e2 * e2);
  b.beta2 = std::sqrt((3.0 * a2 + 7.0 * e2 - b.D) / 2.0);
  b.beta3 = std::sqrt((3.0 * a2 + 7.0 * e2 + b.D) / 2.0);
  return b;
}

Matrix9cd amplitude_equation_matrix(const SystemParams& params,
                                    bool include_drive, bool include_decay) {
  const double eta = params.eta(), eta_a = params.eta_a();
  const double Om = include_drive ? params.Omega_e : 0.0;
  const Complex dt = include_decay ? Complex(params.Delta(), -params.kappa)
                                   : Complex(params.Delta(), 0.0);
  const double r2 = std::sqrt(2.0);
  Matrix9cd m = Matrix9cd::Zero();
  m(kG100, kG100) = dt;
  m(kG100, kG011) = -eta;
  m(kG100, kE000) = eta_a;
  m(kG011, kG100) = -eta;
  m(kG011, kG011) = dt;
  m(kE000, kG100) = eta_a;
  m(kE000, kE000) = dt;
  m(kE000, kG000) = Om;
  m(kG200, kG200) = 2.0 * dt;
  m(kG200, kG111) = -r2 * eta;
  m(kG200, kE100) = r2 * eta_a;
  m(kG111, kG200) = -r2 * eta;
  m(kG111, kG111) = 2.0 * dt;
  m(kG111, kG022) = -2.0 * eta;
  m(kG111, kE011) = eta_a;
  m(kE100, kG100) = Om;
  m(kE100, kG200) = r2 * eta_a;
  m(kE100, kE100) = 2.0 * dt;
  m(kE100, kE011) = -eta;
  m(kG022, kG111) = -2.0 * eta;
  m(kG022, kG022) = 2.0 * dt;
  m(kE011, kG011) = Om;
  m(kE011, kG111) = eta_a;
  m(kE011, kE100) = -eta;
  m(kE011, kE011) = 2.0 * dt;
  return m;
}

namespace {

// Dense-diagonalization fallback for the dressed states, sector by sector so
// accidental cross-sector degeneracies cannot mix eigenvectors.
void fill_dressed_fallback(const SystemParams& params, SpectrumResult& out) {
  const Matrix9cd m = amplitude_equation_matrix(params, false, false);
  out.dressed.setZero();
  out.dressed(kG000, 0) = 1.0;

  const int sector1[] = {kG100, kG011, kE000};
  const int sector2[] = {kG200, kG111, kE100, kG022, kE011};
  auto diag_sector = [&](auto idx, int n, const double* targets, int* cols) {
    Eigen::MatrixXd h(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h(i, j) = m(idx[i], idx[j]).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    // pair numeric eigenvalues with the analytic list by greedy closest match
    std::vector<bool> used(n, false);
    for (int t = 0; t < n; ++t) {
      int best = -1;
      double bd = 0.0;
      for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        const double d = std::abs(es.eigenvalues()[j] - targets[t]);
        if (best < 0 || d < bd) {
          best = j;
          bd = d;
        }
      }
      used[best] = true;
      for (int i = 0; i < n; ++i)
        out.dressed(idx[i], cols[t]) = es.eigenvectors()(i, best);
    }
  };
  const double t1[] = {out.lambda10, out.lambda1m, out.lambda1p};
  int c1[] = {1, 2, 3};
  diag_sector(sector1, 3, t1, c1);
  const double t2[] = {out.lambda20, out.lambda21m, out.lambda21p,
                       out.lambda22m, out.lambda22p};
  int c2[] = {4, 5, 6, 7, 8};
  diag_sector(sector2, 5, t2, c2);
}

}  // namespace

SpectrumResult spectrum(const SystemParams& params) {
  const double eta = params.eta(), eta_a = params.eta_a();
  if (eta == 0.0 && eta_a == 0.0)
    throw std::invalid_argument("spectrum: eta and eta_a both zero");
  const double Delta = params.Delta();
  SpectrumResult out;
  out.b = betas(eta, eta_a);
  const Betas& b = out.b;
  out.lambda0 = 0.0;
  out.lambda10 = Delta;
  out.lambda1m = Delta - b.beta1;
  out.lambda1p = Delta + b.beta1;
  out.lambda20 = 2.0 * Delta;
  out.lambda21m = 2.0 * Delta - b.beta2;
  out.lambda21p = 2.0 * Delta + b.beta2;
  out.lambda22m = 2.0 * Delta - b.beta3;
  out.lambda22p = 2.0 * Delta + b.beta3;

  if (eta == 0.0 || eta_a == 0.0) {
    out.degenerate_fallback = true;
    fill_dressed_fallback(params, out);
    return out;
  }

  const double r2 = std::sqrt(2.0);
  const double b1s = b.beta1 * b.beta1;
  const double e2 = eta * eta, a2 = eta_a * eta_a;
  Matrix9d& v = out.dressed;
  v.setZero();
  v(kG000, 0) = 1.0;
  // one-excitation sector
  v(kG011, 1) = eta_a / b.beta1;
  v(kE000, 1) = eta / b.beta1;
  v(kG100, 2) = 1.0 / r2;
  v(kG011, 2) = eta / (r2 * b.beta1);
  v(kE000, 2) = -eta_a / (r2 * b.beta1);
  v(kG100, 3) = 1.0 / r2;
  v(kG011, 3) = -eta / (r2 * b.beta1);
  v(kE000, 3) = eta_a / (r2 * b.beta1);
  // two-excitation sector
  const double A1 = std::sqrt(b1s * b1s + 2.0 * e2 * e2) / (r2 * e2);
  v(kG200, 4) = 1.0 / A1;
  v(kG022, 4) = (a2 - e2) / (r2 * e2 * A1);
  v(kE011, 4) = r2 * eta_a / (eta * A1);

  const double M1 = 3.0 * b1s - b.D;
  const double M2 = 3.0 * b1s + b.D;
  const double d11 = b1s * (b.D - 5.0 * e2 - a2) / (r2 * eta_a * eta * M1);
  const double d12 = b.beta2 * (b.D - 5.0 * b1s) / (2.0 * eta_a * M1);
  const double d13 = b.beta2 * (b1s - b.D) / (2.0 * eta * M1);
  const double d14 = eta * (b.D - 5.0 * b1s) / (eta_a * M1);
  const double d21 = -b1s * (b.D + 5.0 * e2 + a2) / (r2 * eta_a * eta * M2);
  const double d22 = -b.beta3 * (5.0 * b1s + b.D) / (2.0 * eta_a * M2);
  // beta3 here, not the beta2 of the printed table (the beta2 variant is not
  // an eigenvector; see the unit tests, which check against diagonalization)
  const double d23 = b.beta3 * (b1s + b.D) / (2.0 * eta * M2);
  const double d24 = -eta * (b.D + 5.0 * b1s) / (eta_a * M2);
  const double A2 = std::sqrt(d11 * d11 + d12 * d12 + d13 * d13 + d14 * d14 + 1.0);
  const double A3 = std::sqrt(d21 * d21 + d22 * d22 + d23 * d23 + d24 * d24 + 1.0);

  v(kG200, 5) = d11 / A2;
  v(kG111, 5) = d12 / A2;
  v(kE100, 5) = d13 / A2;
  v(kG022, 5) = d14 / A2;
  v(kE011, 5) = 1.0 / A2;
  v(kG200, 6) = d11 / A2;
  v(kG111, 6) = -d12 / A2;
  v(kE100, 6) = -d13 / A2;
  v(kG022, 6) = d14 / A2;
  v(kE011, 6) = 1.0 / A2;
  v(kG200, 7) = d21 / A3;
  v(kG111, 7) = d22 / A3;
  v(kE100, 7) = d23 / A3;
  v(kG022, 7) = d24 / A3;
  v(kE011, 7) = 1.0 / A3;
  v(kG200, 8) = d21 / A3;
  v(kG111, 8) = -d22 / A3;
  v(kE100, 8) = -d23 / A3;
  v(kG022, 8) = d24 / A3;
  v(kE011, 8) = 1.0 / A3;
  return out;
}

AmplitudeSet steady_amplitudes(const SystemParams& params) {
  params.validate();
  const double eta = params.eta(), eta_a = params.eta_a();
  const double Om = params.Omega_e;
  const double e2 = eta * eta, a2 = eta_a * eta_a;
  const Betas b = betas(eta, eta_a);
  AmplitudeSet amp;
  const Complex dt(params.Delta(), -params.kappa);
  amp.delta_tilde = dt;
  const Complex dt2 = dt * dt, dt4 = dt2 * dt2;
  amp.B = 0.5 * (dt2 - b.beta1 * b.beta1) * (4.0 * dt2 - b.beta2 * b.beta2) *
          (4.0 * dt2 - b.beta3 * b.beta3);
  if (std::abs(amp.B) < 1e-14)
    throw std::runtime_error("steady_amplitudes: singular configuration, |B| ~ 0");
  const Complex B = amp.B;
  const Complex one_den = dt2 - a2 - e2;
  const double r2 = std::sqrt(2.0);

  amp[kG000] = 1.0;
  amp[kG100] = eta_a * Om / one_den;
  amp[kG011] = eta * eta_a * Om / (dt * one_den);
  amp[kE000] = -(dt2 - e2) * Om / (dt * one_den);
  amp[kG111] = a2 * eta * (5.0 * dt2 - a2 + e2) * Om * Om / (dt * B);
  amp[kG200] =
      a2 * (4.0 * dt4 + dt2 * (e2 - a2) - 2.0 * e2 * e2) * Om * Om / (r2 * dt2 * B);
  amp[kE100] = -eta_a * (4.0 * dt4 - dt2 * (a2 + 4.0 * e2) + e2 * a2 - 3.0 * e2 * e2) *
               Om * Om / (dt * B);
  amp[kG022] = e2 * a2 * (5.0 * dt2 - a2 + e2) * Om * Om / (dt2 * B);
  amp[kE011] = -eta_a * eta * (6.0 * dt4 - dt2 * (a2 + 9.0 * e2) + 2.0 * e2 * a2) *
               Om * Om / (dt2 * B);
  return amp;
}

AmplitudeSet ode_fixed_point(const SystemParams& params) {
  params.validate();
  const Matrix9cd m = amplitude_equation_matrix(params, true, true);
  Eigen::Matrix<Complex, 8, 8> m8 = m.block<8, 8>(1, 1);
  Eigen::Matrix<Complex, 8, 1> rhs = -m.block<8, 1>(1, 0);
  Eigen::FullPivLU<Eigen::Matrix<Complex, 8, 8>> lu(m8);
  if (!lu.isInvertible())
    throw std::runtime_error("ode_fixed_point: singular linear system");
  Eigen::Matrix<Complex, 8, 1> x = lu.solve(rhs);
  AmplitudeSet amp;
  amp.delta_tilde = Complex(params.Delta(), -params.kappa);
  const Betas b = betas(params.eta(), params.eta_a());
  const Complex dt2 = amp.delta_tilde * amp.delta_tilde;
  amp.B = 0.5 * (dt2 - b.beta1 * b.beta1) * (4.0 * dt2 - b.beta2 * b.beta2) *
          (4.0 * dt2 - b.beta3 * b.beta3);
  amp[kG000] = 1.0;
  for (int i = 0; i < 8; ++i) amp.c[i + 1] = x[i];
  return amp;
}

AnalyticG2 analytic_g2(const SystemParams& params) {
  return analytic_g2(params, steady_amplitudes(params));
}

AnalyticG2 analytic_g2(const SystemParams& params, const AmplitudeSet& amp) {
  auto a2 = [](Complex c) { return std::norm(c); };
  const double p100 = a2(amp[kG100]), p011 = a2(amp[kG011]);
  const double p200 = a2(amp[kG200]), p022 = a2(amp[kG022]);
  const double p111 = a2(amp[kG111]);
  const double p_e100 = a2(amp[kE100]), p_e011 = a2(amp[kE011]);
  if (p100 < 1e-30 || p011 < 1e-30 || p100 + p011 < 1e-30)
    throw std::runtime_error("analytic_g2: vanishing single-excitation population");

  AnalyticG2 g;
  const double u1 = 2.0 * p200 + p111 + p_e100;
  const double u2 = 2.0 * p022 + p111 + p_e011;
  g.aplus_exact = 2.0 * p200 / ((p100 + u1) * (p100 + u1));
  g.aplus_approx = 2.0 * p200 / (p100 * p100);
  g.aminus_exact = 2.0 * p022 / ((p011 + u2) * (p011 + u2));
  g.aminus_approx = 2.0 * p022 / (p011 * p011);
  g.bare_approx =
      2.0 * (p200 + p022 + 2.0 * p111) / ((p100 + p011) * (p100 + p011));
  const double eta = params.eta();
  const Complex dt = amp.delta_tilde;
  g.F1 = std::norm(dt / eta) + 1.0;
  g.F2 = std::norm(eta / dt) + 1.0;
  g.decomposition_lhs = g.bare_approx;
  g.decomposition_rhs = g.aplus_approx / (g.F2 * g.F2) +
                        (2.0 / g.F1 - 1.0 / (g.F1 * g.F1)) * g.aminus_approx;
  return g;
}

double interference_dip_aplus(double eta, double eta_a) {
  const double e2 = eta * eta, a2 = eta_a * eta_a;
  const double disc = (e2 - a2) * (e2 - a2) + 32.0 * e2 * e2;
  const double d2 = ((a2 - e2) + std::sqrt(disc)) / 8.0;
  return d2 > 0.0 ? std::sqrt(d2) : std::numeric_limits<double>::quiet_NaN();
}

double interference_dip_aminus(double eta, double eta_a) {
  const double d2 = (eta_a * eta_a - eta * eta) / 5.0;
  return d2 > 0.0 ? std::sqrt(d2) : std::numeric_limits<double>::quiet_NaN();
}

int BasisChange::index(int n_first, int n_second) const {
  const int s = n_first + n_second;
  if (s > n_max || n_first < 0 || n_second < 0)
    throw std::out_of_range("BasisChange::index");
  return s * (s + 1) / 2 + n_second;
}

BasisChange basis_change(int n_max) {
  if (n_max < 0) throw std::invalid_argument("basis_change: n_max < 0");
  BasisChange bc;
  bc.n_max = n_max;
  const int size = (n_max + 1) * (n_max + 2) / 2;
  bc.U = Eigen::MatrixXd::Zero(size, size);

  // two-mode scratch space with bare labels (n_m, n_a)
  CompositeSpace two({n_max + 1, n_max + 1}, Layout::Bare);
  const SparseOperator cm_dag = creator(two, 0);  // m'
  const SparseOperator ca_dag = creator(two, 1);  // a'
  const double r2 = 1.0 / std::sqrt(2.0);
  const SparseOperator cp = r2 * (cm_dag + ca_dag);  // a_+'
  const SparseOperator cmn = r2 * (cm_dag - ca_dag); // a_-'

  for (int s = 0; s <= n_max; ++s) {
    for (int nm = 0; nm <= s; ++nm) {
      const int np = s - nm;  // dressed occupations (n_+, n_-) = (np, nm)
      StateVector v = StateVector::basis_state(two, {0, 0});
      for (int k = 0; k < np; ++k) v = cp * v;
      for (int k = 0; k < nm; ++k) v = cmn * v;
      double fact = 1.0;
      for (int k = 1; k <= np; ++k) fact *= k;
      for (int k = 1; k <= nm; ++k) fact *= k;
      v.amplitudes() /= std::sqrt(fact);
      const int col = bc.index(np, nm);
      for (int bm = 0; bm <= s; ++bm) {
        const int ba = s - bm;
        const Complex c = v.amplitudes()[two.index({bm, ba})];
        bc.U(bc.index(bm, ba), col) = c.real();
      }
    }
  }
  return bc;
}

}  // namespace blockade
