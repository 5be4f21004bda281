#include "sda/selection.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace sda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_upper(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Type-7 quantile of sorted data.
double quantile_sorted(const std::vector<double>& s, double q) {
  const double h = (static_cast<double>(s.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

// Minimizes f over R^2.
template <typename F>
std::array<double, 2> nelder_mead(F f, std::array<double, 2> start, std::array<double, 2> step) {
  using Pt = std::array<double, 2>;
  std::array<Pt, 3> x{start, Pt{start[0] + step[0], start[1]}, Pt{start[0], start[1] + step[1]}};
  std::array<double, 3> fx{f(x[0]), f(x[1]), f(x[2])};
  auto lerp = [](const Pt& a, const Pt& b, double t) { return Pt{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}; };

  for (int iter = 0; iter < 1000; ++iter) {
    std::array<int, 3> o{0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    const Pt best = x[o[0]], mid = x[o[1]], worst = x[o[2]];
    const double fb = fx[o[0]], fm = fx[o[1]], fw = fx[o[2]];
    if (std::abs(fw - fb) <= 1e-12 * (std::abs(fb) + 1e-12) &&
        std::abs(worst[0] - best[0]) + std::abs(worst[1] - best[1]) < 1e-10)
      break;

    const Pt centroid{(best[0] + mid[0]) / 2.0, (best[1] + mid[1]) / 2.0};
    const Pt refl = lerp(centroid, worst, -1.0);
    const double fr = f(refl);
    Pt next;
    double fnext;
    if (fr < fb) {
      const Pt exp = lerp(centroid, worst, -2.0);
      const double fe = f(exp);
      next = fe < fr ? exp : refl;
      fnext = std::min(fe, fr);
    } else if (fr < fm) {
      next = refl;
      fnext = fr;
    } else {
      const Pt con = fr < fw ? lerp(centroid, refl, 0.5) : lerp(centroid, worst, 0.5);
      const double fc = f(con);
      if (fc < std::min(fr, fw)) {
        next = con;
        fnext = fc;
      } else {
        // shrink toward the best vertex
        x[o[1]] = lerp(best, mid, 0.5);
        fx[o[1]] = f(x[o[1]]);
        x[o[2]] = lerp(best, worst, 0.5);
        fx[o[2]] = f(x[o[2]]);
        continue;
      }
    }
    x[o[2]] = next;
    fx[o[2]] = fnext;
  }
  const auto best = std::min_element(fx.begin(), fx.end()) - fx.begin();
  return x[best];
}

// Truncated normal likelihood on the central window, conditioned on z <=
// upper. Points below the window enter only through their count: non-null
// features sit in the upper tail, so everything below `upper` is null, and
// the count pins the scale far better than the window shape alone.
NullParams fit_truncated_null(const std::vector<double>& sorted, double central_fraction) {
  const double tail = (1.0 - central_fraction) / 2.0;
  NullParams np;
  np.lower = quantile_sorted(sorted, tail);
  np.upper = quantile_sorted(sorted, 1.0 - tail);
  std::vector<double> inside;
  double below = 0.0;
  for (double v : sorted) {
    if (v < np.lower) below += 1.0;
    else if (v <= np.upper) inside.push_back(v);
  }

  const double med = quantile_sorted(sorted, 0.5);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double sd0 = iqr / 1.349;
  if (!(sd0 > 0.0)) sd0 = 1.0;

  const double a = np.lower, b = np.upper;
  const double m = static_cast<double>(inside.size());
  auto nll = [&](const std::array<double, 2>& th) {
    const double mu = th[0], sigma = std::exp(th[1]);
    const double lo = normal_cdf((a - mu) / sigma), up = normal_cdf((b - mu) / sigma);
    if (!(up > 1e-300) || (below > 0.0 && !(lo > 1e-300))) return kInf;
    double ss = 0.0;
    for (double v : inside) ss += (v - mu) * (v - mu);
    const double censored = below > 0.0 ? below * std::log(lo) : 0.0;
    return m * std::log(sigma) + ss / (2.0 * sigma * sigma) - censored + (m + below) * std::log(up);
  };
  const auto th = nelder_mead(nll, {med, std::log(sd0)}, {0.1 * sd0, 0.1});
  np.location = th[0];
  np.scale = std::exp(th[1]);
  return np;
}

struct Hull {
  std::vector<double> x, y;
};

// Least concave majorant of the ECDF of sorted values in [0, 1].
Hull concave_majorant(const std::vector<double>& sorted) {
  const double n = static_cast<double>(sorted.size());
  std::vector<double> px{0.0}, py{0.0};
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double y = static_cast<double>(i + 1) / n;
    if (sorted[i] == px.back()) {
      py.back() = y;
    } else {
      px.push_back(sorted[i]);
      py.push_back(y);
    }
  }
  if (px.back() < 1.0) {
    px.push_back(1.0);
    py.push_back(1.0);
  }
  Hull h;
  for (std::size_t i = 0; i < px.size(); ++i) {
    while (h.x.size() >= 2) {
      const std::size_t k = h.x.size();
      const double cross = (h.x[k - 1] - h.x[k - 2]) * (py[i] - h.y[k - 2]) - (h.y[k - 1] - h.y[k - 2]) * (px[i] - h.x[k - 2]);
      if (cross >= 0.0) {
        h.x.pop_back();
        h.y.pop_back();
      } else {
        break;
      }
    }
    h.x.push_back(px[i]);
    h.y.push_back(py[i]);
  }
  return h;
}

}  // namespace

// --- normalization -----------------------------------------------------------

double summary_df(int num_classes) { return std::max(1.0, static_cast<double>(num_classes - 1)); }

Vector wilson_hilferty(const Vector& summary, double df, double scale) {
  if (!(df > 0.0)) fail(ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  require(scale > 0.0, "chi-square scale must be positive");
  const double center = 1.0 - 2.0 / (9.0 * df);
  const double spread = std::sqrt(2.0 / (9.0 * df));
  Vector z(summary.size());
  for (Eigen::Index i = 0; i < summary.size(); ++i) {
    require(summary[i] >= 0.0, "summary scores must be non-negative");
    z[i] = (std::cbrt(summary[i] / (scale * df)) - center) / spread;
  }
  return z;
}

Vector chi_square_normal(const Vector& summary, double df, double scale) {
  if (!(df > 0.0)) fail(ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  require(scale > 0.0, "chi-square scale must be positive");
  const boost::math::chi_squared chi(df);
  const boost::math::normal normal;
  constexpr double tiny = std::numeric_limits<double>::min();
  Vector z(summary.size());
  for (Eigen::Index i = 0; i < summary.size(); ++i) {
    require(summary[i] >= 0.0, "summary scores must be non-negative");
    const double x = summary[i] / scale;
    const double lower = boost::math::cdf(chi, x);
    if (lower < 0.5) {
      z[i] = boost::math::quantile(normal, std::max(lower, tiny));
    } else {
      const double upper = boost::math::cdf(boost::math::complement(chi, x));
      z[i] = boost::math::quantile(boost::math::complement(normal, std::max(upper, tiny)));
    }
  }
  return z;
}

const char* to_string(ScoreTransform t) { return t == ScoreTransform::ChiSquare ? "chisq" : "wh"; }

ScoreTransform parse_transform(const std::string& s) {
  if (s == "chisq") return ScoreTransform::ChiSquare;
  if (s == "wh") return ScoreTransform::WilsonHilferty;
  fail(ErrorCode::InvalidArgument, "unknown score transform '" + s + "' (expected chisq or wh)");
}

NormalizedScores normalize_scores(const Vector& summary, double df, ScoreTransform transform) {
  if (!(df > 0.0)) fail(ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  require(summary.size() > 0, "no scores to normalize");
  const double med = median(summary);
  if (!(med > 0.0)) fail(ErrorCode::DataError, "median summary score is zero; cannot fit null scale");
  NormalizedScores out;
  out.df = df;
  if (transform == ScoreTransform::WilsonHilferty) {
    const double center = 1.0 - 2.0 / (9.0 * df);
    out.scale = med / (df * center * center * center);
    out.z = wilson_hilferty(summary, df, out.scale);
  } else {
    out.scale = med / boost::math::quantile(boost::math::chi_squared(df), 0.5);
    out.z = chi_square_normal(summary, df, out.scale);
  }
  return out;
}

// --- fdr ---------------------------------------------------------------------

FdrEstimate estimate_fdr(const Vector& z, const FdrOptions& opts) {
  const Eigen::Index p = z.size();
  if (p < opts.min_features)
    fail(ErrorCode::InvalidArgument, "fdr estimation needs at least " + std::to_string(opts.min_features) +
                                         " features, got " + std::to_string(p));
  require(opts.central_fraction > 0.0 && opts.central_fraction < 1.0, "central fraction must lie in (0,1)");
  if (!z.allFinite()) fail(ErrorCode::DataError, "non-finite transformed scores");
  if (z.maxCoeff() == z.minCoeff()) fail(ErrorCode::DataError, "all transformed scores are equal");

  std::vector<double> sorted(z.data(), z.data() + p);
  std::sort(sorted.begin(), sorted.end());

  FdrEstimate est;
  est.transformed = z;
  est.null_params = fit_truncated_null(sorted, opts.central_fraction);
  const auto& np = est.null_params;

  // null mass below the upper window edge against the observed count there
  const double null_mass = normal_cdf((np.upper - np.location) / np.scale);
  Eigen::Index below_upper = 0;
  for (double v : sorted) below_upper += v <= np.upper;
  est.pi0 = std::clamp(static_cast<double>(below_upper) / static_cast<double>(p) / null_mass, 1e-6, 1.0);

  est.pvalues.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) est.pvalues[i] = normal_upper((z[i] - np.location) / np.scale);

  std::vector<double> psorted(est.pvalues.data(), est.pvalues.data() + p);
  std::sort(psorted.begin(), psorted.end());
  const Hull hull = concave_majorant(psorted);

  est.local_fdr.resize(p);
  est.tail_fdr.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double pv = est.pvalues[i];
    if (pv <= hull.x.front()) {
      est.local_fdr[i] = 0.0;
      est.tail_fdr[i] = 0.0;
      continue;
    }
    // first hull knot at or right of pv; the segment ending there holds pv
    const auto j = static_cast<std::size_t>(std::lower_bound(hull.x.begin(), hull.x.end(), pv) - hull.x.begin());
    const double slope = (hull.y[j] - hull.y[j - 1]) / (hull.x[j] - hull.x[j - 1]);
    const double cdf = hull.y[j - 1] + slope * (pv - hull.x[j - 1]);
    est.local_fdr[i] = std::min(1.0, est.pi0 / slope);
    est.tail_fdr[i] = std::min(1.0, est.pi0 * pv / cdf);
  }

  // non-increasing in z: running max from the largest z downward
  IndexList order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return z[a] > z[b]; });
  double run_local = 0.0, run_tail = 0.0;
  for (Eigen::Index i : order) {
    run_local = std::max(run_local, est.local_fdr[i]);
    run_tail = std::max(run_tail, est.tail_fdr[i]);
    est.local_fdr[i] = run_local;
    est.tail_fdr[i] = run_tail;
  }
  return est;
}

// --- rules -------------------------------------------------------------------

const char* to_string(RuleKind r) {
  switch (r) {
    case RuleKind::FNDR: return "fndr";
    case RuleKind::FDR: return "fdr";
    case RuleKind::HC: return "hc";
    case RuleKind::Top: return "top";
    case RuleKind::All: return "all";
  }
  return "?";
}

RuleKind parse_rule(const std::string& s) {
  for (RuleKind r : {RuleKind::FNDR, RuleKind::FDR, RuleKind::HC, RuleKind::Top, RuleKind::All})
    if (s == to_string(r)) return r;
  fail(ErrorCode::InvalidArgument, "unknown selection rule '" + s + "'");
}

namespace {

SelectionResult threshold_fdr(const FdrEstimate& est, double limit, SelectionRule rule) {
  SelectionResult out;
  out.rule = rule;
  out.per_feature_fdr = rule.fdr_kind == FdrKind::Local ? est.local_fdr : est.tail_fdr;
  out.threshold_value = kInf;
  for (Eigen::Index i = 0; i < out.per_feature_fdr.size(); ++i) {
    if (out.per_feature_fdr[i] < limit) {
      out.kept.push_back(i);
      out.threshold_value = std::min(out.threshold_value, est.transformed[i]);
    }
  }
  return out;
}

SelectionResult select_hc_ordered(const Vector& pvalues, const IndexList& order, double fraction,
                                  HcVariance variance) {
  const Eigen::Index p = pvalues.size();
  if (p < 10) fail(ErrorCode::InvalidArgument, "higher criticism needs at least 10 features");
  require(fraction > 0.0 && fraction <= 0.5, "HC search fraction must lie in (0, 0.5]");
  Vector sorted(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    sorted[i] = pvalues[order[static_cast<std::size_t>(i)]];
    require(sorted[i] >= 0.0 && sorted[i] <= 1.0, "p-values must lie in [0,1]");
  }
  const Vector hc = hc_scores(sorted, variance);
  const auto limit = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(p))));
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < limit; ++i)
    if (std::abs(hc[i]) > std::abs(hc[best])) best = i;

  SelectionResult out;
  out.rule.kind = RuleKind::HC;
  out.rule.hc_fraction = fraction;
  out.rule.hc_variance = variance;
  out.kept.assign(order.begin(), order.begin() + best + 1);
  std::sort(out.kept.begin(), out.kept.end());
  out.threshold_value = sorted[best];
  return out;
}

}  // namespace

SelectionResult select_fndr(const FdrEstimate& est, double cutoff, FdrKind kind) {
  require(cutoff > 0.0 && cutoff <= 0.5, "FNDR cutoff must lie in (0, 0.5]");
  SelectionRule rule{RuleKind::FNDR, cutoff};
  rule.fdr_kind = kind;
  return threshold_fdr(est, 1.0 - cutoff, rule);
}

SelectionResult select_fdr(const FdrEstimate& est, double cutoff, FdrKind kind) {
  require(cutoff > 0.0 && cutoff <= 0.5, "FDR cutoff must lie in (0, 0.5]");
  SelectionRule rule{RuleKind::FDR, cutoff};
  rule.fdr_kind = kind;
  return threshold_fdr(est, cutoff, rule);
}

Vector hc_scores(const Vector& sorted, HcVariance variance) {
  const Eigen::Index p = sorted.size();
  const double pd = static_cast<double>(p);
  Vector hc(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double i = static_cast<double>(k + 1);
    if (variance == HcVariance::OrderStatistic) {
      const double mean = i / (pd + 1.0);
      const double var = i * (pd - i + 1.0) / ((pd + 1.0) * (pd + 1.0) * (pd + 2.0));
      hc[k] = (mean - sorted[k]) / std::sqrt(var);
    } else {
      const double pk = sorted[k];
      const double var = pk * (1.0 - pk) / pd;
      hc[k] = var > 0.0 ? (i / pd - pk) / std::sqrt(var) : 0.0;
    }
  }
  return hc;
}

SelectionResult select_hc(const Vector& pvalues, double search_fraction, HcVariance variance) {
  IndexList order(static_cast<std::size_t>(pvalues.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return pvalues[a] < pvalues[b]; });
  return select_hc_ordered(pvalues, order, search_fraction, variance);
}

SelectionResult select_top(const Vector& summary, Eigen::Index count) {
  require(count >= 0, "top count must be non-negative");
  const IndexList order = rank_descending(summary);
  SelectionResult out;
  out.rule.kind = RuleKind::Top;
  out.rule.top = count;
  const auto m = std::min<Eigen::Index>(count, summary.size());
  out.kept.assign(order.begin(), order.begin() + m);
  std::sort(out.kept.begin(), out.kept.end());
  out.threshold_value = m > 0 ? summary[order[static_cast<std::size_t>(m - 1)]] : kInf;
  return out;
}

FeatureSelection select_features(const ScoreTable& scores, const SelectionRule& rule, const FdrOptions& opts) {
  FeatureSelection out;
  out.summary = scores.summary;
  const Eigen::Index p = out.summary.size();

  switch (rule.kind) {
    case RuleKind::All:
      out.result.rule = rule;
      out.result.kept.resize(static_cast<std::size_t>(p));
      std::iota(out.result.kept.begin(), out.result.kept.end(), Eigen::Index{0});
      break;
    case RuleKind::Top:
      out.result = select_top(out.summary, rule.top);
      break;
    case RuleKind::FNDR:
    case RuleKind::FDR:
    case RuleKind::HC: {
      out.normalized = normalize_scores(out.summary, summary_df(scores.num_classes()), opts.transform);
      out.fdr = estimate_fdr(out.normalized->z, opts);
      if (rule.kind == RuleKind::FNDR) {
        out.result = select_fndr(*out.fdr, rule.cutoff, rule.fdr_kind);
      } else if (rule.kind == RuleKind::FDR) {
        out.result = select_fdr(*out.fdr, rule.cutoff, rule.fdr_kind);
      } else {
        out.result = select_hc_ordered(out.fdr->pvalues, rank_descending(out.summary), rule.hc_fraction,
                                       rule.hc_variance);
        out.result.per_feature_fdr = out.fdr->local_fdr;
      }
      out.result.rule = rule;
      break;
    }
  }

  out.result.threshold_value = kInf;
  for (Eigen::Index i : out.result.kept) out.result.threshold_value = std::min(out.result.threshold_value, out.summary[i]);
  return out;
}

}  // namespace sda
