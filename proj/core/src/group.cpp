#include "histoport/group.hpp"

#include <cmath>

namespace histoport {

namespace {

double reduce_angle(double theta, double period) {
  double a = std::fmod(theta, period);
  if (a < 0) a += period;
  // fmod can land exactly on period after the correction when theta is a
  // tiny negative number.
  if (a >= period) a -= period;
  return a;
}

void fill_rotation_block(Mat& m, int at, double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  m(at, at) = c;
  m(at, at + 1) = -s;
  m(at + 1, at) = s;
  m(at + 1, at + 1) = c;
}

}  // namespace

GroupElement GroupElement::rotation(double theta, double period) {
  GroupElement g;
  g.angle = reduce_angle(theta, period);
  g.period = period;
  return g;
}

GroupElement GroupElement::discrete(int i, int n, double period) {
  if (n <= 0) throw std::invalid_argument("discrete group order must be positive");
  GroupElement g;
  g.order = n;
  g.index = ((i % n) + n) % n;
  g.period = period;
  g.angle = period * double(g.index) / double(n);
  return g;
}

GroupElement GroupElement::compose(const GroupElement& other) const {
  if (is_discrete() && other.is_discrete() && order == other.order &&
      period == other.period) {
    return discrete(index + other.index, order, period);
  }
  return rotation(angle + other.angle, period);
}

GroupElement GroupElement::inverse() const {
  if (is_discrete()) return discrete(-index, order, period);
  return rotation(-angle, period);
}

RepSpec RepSpec::irrep(int j) {
  if (j < 1) throw std::invalid_argument("irrep frequency must be >= 1");
  return {RepKind::kIrrep, j, 0, 0};
}

RepSpec RepSpec::irrep_sum(int jc) {
  if (jc < 0) throw std::invalid_argument("irrep sum cutoff must be >= 0");
  return {RepKind::kIrrepSum, 0, jc, 0};
}

RepSpec RepSpec::regular(int n) {
  if (n < 1) throw std::invalid_argument("regular rep order must be >= 1");
  return {RepKind::kRegular, 0, 0, n};
}

RepSpec RepSpec::quotient_irrep_sum(int jc) {
  if (jc < 0) throw std::invalid_argument("irrep sum cutoff must be >= 0");
  return {RepKind::kQuotientIrrepSum, 0, jc, 0};
}

int RepSpec::dim() const {
  switch (kind) {
    case RepKind::kTrivial: return 1;
    case RepKind::kStandard: return 2;
    case RepKind::kIrrep: return 2;
    case RepKind::kIrrepSum: return 1 + 2 * max_freq;
    case RepKind::kRegular: return order;
    case RepKind::kQuotientIrrepSum: return 1 + 2 * max_freq;
  }
  return 0;
}

std::vector<int> RepSpec::theta_frequencies() const {
  std::vector<int> f;
  switch (kind) {
    case RepKind::kTrivial: f = {0}; break;
    case RepKind::kStandard: f = {1}; break;
    case RepKind::kIrrep: f = {freq}; break;
    case RepKind::kIrrepSum:
      for (int j = 0; j <= max_freq; ++j) f.push_back(j);
      break;
    case RepKind::kQuotientIrrepSum:
      // Functions on the quotient are pi-periodic in theta, so only even
      // theta-frequencies appear.
      for (int j = 0; j <= max_freq; ++j) f.push_back(2 * j);
      break;
    case RepKind::kRegular:
      throw std::invalid_argument("regular rep has no frequency decomposition here");
  }
  return f;
}

Mat rep_matrix(const RepSpec& rep, const GroupElement& g) {
  switch (rep.kind) {
    case RepKind::kTrivial: {
      Mat m(1, 1);
      m(0, 0) = 1.0;
      return m;
    }
    case RepKind::kStandard: {
      Mat m(2, 2);
      fill_rotation_block(m, 0, g.angle);
      return m;
    }
    case RepKind::kIrrep: {
      Mat m(2, 2);
      fill_rotation_block(m, 0, rep.freq * g.angle);
      return m;
    }
    case RepKind::kIrrepSum: {
      Mat m(rep.dim(), rep.dim());
      m(0, 0) = 1.0;
      for (int j = 1; j <= rep.max_freq; ++j)
        fill_rotation_block(m, 1 + 2 * (j - 1), j * g.angle);
      return m;
    }
    case RepKind::kQuotientIrrepSum: {
      // The quotient coordinate is the doubled angle; a full-group element
      // acts through it, which makes the half-turn act as identity.
      Mat m(rep.dim(), rep.dim());
      m(0, 0) = 1.0;
      double alpha = 2.0 * g.angle;
      for (int j = 1; j <= rep.max_freq; ++j)
        fill_rotation_block(m, 1 + 2 * (j - 1), j * alpha);
      return m;
    }
    case RepKind::kRegular: {
      if (!g.is_discrete())
        throw std::domain_error("regular rep is defined only on grid elements");
      if (g.order != rep.order)
        throw std::domain_error("regular rep grid size mismatch");
      // [rho(g_i) v]_k = v_{(k-i) mod N}: a rotation by one grid step moves
      // the value at bin k to bin k+1.
      int n = rep.order;
      Mat m(n, n);
      for (int k = 0; k < n; ++k) m(k, ((k - g.index) % n + n) % n) = 1.0;
      return m;
    }
  }
  throw std::logic_error("unreachable");
}

DiscretizationMatrix discretization_matrix(int n, int jc, bool quotient) {
  if (jc < 0) throw std::invalid_argument("frequency cutoff must be >= 0");
  if (quotient && n % 2 != 0)
    throw std::invalid_argument("quotient grid requires even n");
  if ((quotient ? n / 2 : n) < 1 + 2 * jc)
    throw std::invalid_argument(
        "grid too coarse for frequency cutoff (need rows >= 1+2*jc)");

  DiscretizationMatrix d;
  d.max_freq = jc;
  d.quotient = quotient;
  d.num_rows = quotient ? n / 2 : n;
  int cols = 1 + 2 * jc;
  d.q = Mat(d.num_rows, cols);
  for (int i = 0; i < d.num_rows; ++i) {
    // Quotient grid angles are theta_i = pi*i/(N/2); evaluation happens in
    // the doubled angle alpha = 2*theta, which lands on the same formula as
    // a full grid with N/2 points.
    double a = kTwoPi * double(i) / double(d.num_rows);
    d.q(i, 0) = 1.0;
    for (int j = 1; j <= jc; ++j) {
      d.q(i, 2 * j - 1) = std::cos(j * a);
      d.q(i, 2 * j) = std::sin(j * a);
    }
  }

  // Rows of Q are orthogonal columns-wise when num_rows > 2*jc, giving the
  // exact left inverse  D * Q^T,  D = diag(1/R, 2/R, ..., 2/R).
  d.pinv = Mat(cols, d.num_rows);
  double r = double(d.num_rows);
  for (int i = 0; i < d.num_rows; ++i) {
    d.pinv(0, i) = d.q(i, 0) / r;
    for (int c = 1; c < cols; ++c) d.pinv(c, i) = 2.0 * d.q(i, c) / r;
  }
  return d;
}

std::vector<double> fit_coefficients(const std::vector<double>& samples, int n, int jc) {
  if (int(samples.size()) != n)
    throw std::invalid_argument("sample count does not match grid size");
  DiscretizationMatrix d = discretization_matrix(n, jc, false);
  return d.pinv * samples;
}

}  // namespace histoport
