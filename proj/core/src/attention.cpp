// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/attention.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "viewstyle/parallel.hpp"

namespace viewstyle {

void AttentionConfig::validate() const {
  if (!(lambda_self > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda_self must be positive");
  if (!(l_min > 0.0 && l_min <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "l_min must lie in (0, 1]");
  if (!(d_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "d_max must be positive");
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  if (!(lambda_inject >= 0.0 && lambda_inject <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda_inject must lie in [0, 1]");
  }
}

void HeatmapParams::validate() const {
  if (!(d_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "d_max must be positive");
  if (!(l_min > 0.0 && l_min <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "l_min must lie in (0, 1]");
}

std::pair<int, int> pool_window(int i, int pixels, int tokens) {
  const long long p = pixels;
  const long long t = tokens;
  const auto begin = static_cast<int>((i * p) / t);
  const auto end = static_cast<int>(((i + 1) * p + t - 1) / t);
  return {begin, end};
}

AttentionHeatmap correspondences_from_flow(const FlowField& flow, const HeatmapParams& params) {
  params.validate();
  AttentionHeatmap out;
  out.reference_width = flow.coords.width();
  out.reference_height = flow.coords.height();
  out.target_width = flow.target_width;
  out.target_height = flow.target_height;
  out.params = params;
  for (int v = 0; v < flow.coords.height(); ++v) {
    for (int u = 0; u < flow.coords.width(); ++u) {
      if (flow.occluded(u, v) != 0) continue;
      const Eigen::Vector2f& f = flow.coords(u, v);
      const double tu = std::round(static_cast<double>(f.x()));
      const double tv = std::round(static_cast<double>(f.y()));
      if (!(tu >= 0.0 && tv >= 0.0 && tu < flow.target_width && tv < flow.target_height)) continue;
      out.correspondences.push_back({u, v, static_cast<int>(tu), static_cast<int>(tv)});
    }
  }
  return out;
}

namespace {

struct Axis {
  std::vector<int> begin;
  std::vector<int> end;  // exclusive
};

Axis make_axis(int pixels, int tokens) {
  Axis a;
  for (int i = 0; i < tokens; ++i) {
    const auto [b, e] = pool_window(i, pixels, tokens);
    a.begin.push_back(b);
    a.end.push_back(e);
  }
  return a;
}

// Distance from pixel coordinate x to the nearest pixel of [begin, end).
int gap(int x, int begin, int end) {
  if (x < begin) return begin - x;
  if (x >= end) return x - (end - 1);
  return 0;
}

// Tokens whose windows come within `reach` pixels of x.
std::pair<int, int> token_range(const Axis& axis, int x, double reach) {
  const int tokens = static_cast<int>(axis.begin.size());
  int lo = 0;
  while (lo < tokens && static_cast<double>(x - (axis.end[static_cast<std::size_t>(lo)] - 1)) >= reach) ++lo;
  int hi = tokens - 1;
  while (hi >= lo && static_cast<double>(axis.begin[static_cast<std::size_t>(hi)] - x) >= reach) --hi;
  return {lo, hi};
}

// Sum of cones evaluated with each cone at its nearest point of the box: an
// upper bound over the box, and the exact sum for a single pixel. Terms are
// added in cone order so single-pixel values match a direct evaluation.
double cone_sum_bound(std::span<const std::array<int, 2>> cones, int x0, int x1, int y0, int y1, double d_max) {
  double sum = 0.0;
  for (const auto& c : cones) sum += heatmap_kernel(gap(c[0], x0, x1), gap(c[1], y0, y1), d_max);
  return sum;
}

// Raises `best` to the maximum over pixels of [x0, x1) x [y0, y1) of the
// summed cones, or stops once `best` reaches `upper`. Branch and bound on
// box halves, larger bound first.
void max_cone_sum(std::span<const std::array<int, 2>> cones, int x0, int x1, int y0, int y1, double d_max,
                  double upper, double& best) {
  if (best >= upper) return;
  const double bound = cone_sum_bound(cones, x0, x1, y0, y1, d_max);
  if (bound <= best) return;
  if (x1 - x0 == 1 && y1 - y0 == 1) {
    best = bound;
    return;
  }
  int ax0 = x0, ax1 = x1, ay0 = y0, ay1 = y1;
  int bx0 = x0, bx1 = x1, by0 = y0, by1 = y1;
  if (x1 - x0 >= y1 - y0) {
    ax1 = bx0 = x0 + (x1 - x0) / 2;
  } else {
    ay1 = by0 = y0 + (y1 - y0) / 2;
  }
  const double bound_a = cone_sum_bound(cones, ax0, ax1, ay0, ay1, d_max);
  const double bound_b = cone_sum_bound(cones, bx0, bx1, by0, by1, d_max);
  if (bound_a >= bound_b) {
    max_cone_sum(cones, ax0, ax1, ay0, ay1, d_max, upper, best);
    max_cone_sum(cones, bx0, bx1, by0, by1, d_max, upper, best);
  } else {
    max_cone_sum(cones, bx0, bx1, by0, by1, d_max, upper, best);
    max_cone_sum(cones, ax0, ax1, ay0, ay1, d_max, upper, best);
  }
}

}  // namespace

DenseHeatmap materialize_heatmap(const AttentionHeatmap& heatmap, TokenGrid target, TokenGrid reference) {
  const HeatmapParams& params = heatmap.params;
  params.validate();
  if (target.count() <= 0 || reference.count() <= 0 || target.count() > kMaxDenseTokens ||
      reference.count() > kMaxDenseTokens) {
    throw Error(ErrorCode::kInvalidArgument, "dense heatmaps are limited to 4096 tokens per axis");
  }
  if (target.width > heatmap.target_width || target.height > heatmap.target_height ||
      reference.width > heatmap.reference_width || reference.height > heatmap.reference_height) {
    throw Error(ErrorCode::kInvalidArgument, "attention resolution exceeds the frame resolution");
  }

  const Axis ref_x = make_axis(heatmap.reference_width, reference.width);
  const Axis ref_y = make_axis(heatmap.reference_height, reference.height);
  const Axis tgt_x = make_axis(heatmap.target_width, target.width);
  const Axis tgt_y = make_axis(heatmap.target_height, target.height);

  // Sources per target pixel, CSR layout, reference raster order preserved.
  const std::size_t target_pixels =
      static_cast<std::size_t>(heatmap.target_width) * static_cast<std::size_t>(heatmap.target_height);
  std::vector<std::size_t> offsets(target_pixels + 1, 0);
  auto target_index = [&](int tu, int tv) {
    return static_cast<std::size_t>(tv) * static_cast<std::size_t>(heatmap.target_width) +
           static_cast<std::size_t>(tu);
  };
  for (const Correspondence& c : heatmap.correspondences) ++offsets[target_index(c.target_u, c.target_v) + 1];
  for (std::size_t i = 0; i < target_pixels; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::array<int, 2>> sources(heatmap.correspondences.size());
  {
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const Correspondence& c : heatmap.correspondences) {
      sources[cursor[target_index(c.target_u, c.target_v)]++] = {c.u, c.v};
    }
  }

  DenseHeatmap out{target, reference, Eigen::MatrixXd(target.count(), reference.count())};
  const double d_max = params.d_max;
  const double upper = params.clamp_upper ? 1.0 : std::numeric_limits<double>::infinity();

  parallel_for(0, target.count(), [&](std::ptrdiff_t j) {
    const int jx = static_cast<int>(j) % target.width;
    const int jy = static_cast<int>(j) / target.width;
    std::vector<double> best(static_cast<std::size_t>(reference.count()), 0.0);

    // Apexes of lone cones (all cones in max mode), as (v, u) pairs.
    std::vector<std::array<int, 2>> lone;
    std::vector<std::pair<std::size_t, std::size_t>> summed;  // CSR ranges
    for (int tv = tgt_y.begin[static_cast<std::size_t>(jy)]; tv < tgt_y.end[static_cast<std::size_t>(jy)]; ++tv) {
      for (int tu = tgt_x.begin[static_cast<std::size_t>(jx)]; tu < tgt_x.end[static_cast<std::size_t>(jx)]; ++tu) {
        const std::size_t t = target_index(tu, tv);
        const std::size_t first = offsets[t];
        const std::size_t last = offsets[t + 1];
        if (first == last) continue;
        if (last - first == 1 || params.combine == KernelCombine::kMax) {
          for (std::size_t s = first; s < last; ++s) lone.push_back({sources[s][1], sources[s][0]});
        } else {
          summed.emplace_back(first, last);
        }
      }
    }

    if (!lone.empty()) {
      // The kernel decreases with distance, so the largest lone-cone value
      // over a reference window is the kernel at the smallest apex-to-window
      // distance. Apexes are grouped by row and sorted by column.
      std::sort(lone.begin(), lone.end());
      std::vector<std::size_t> row_start{0};
      for (std::size_t s = 1; s < lone.size(); ++s) {
        if (lone[s][0] != lone[s - 1][0]) row_start.push_back(s);
      }
      row_start.push_back(lone.size());
      int u_lo = std::numeric_limits<int>::max(), u_hi = std::numeric_limits<int>::min();
      for (const auto& a : lone) {
        u_lo = std::min(u_lo, a[1]);
        u_hi = std::max(u_hi, a[1]);
      }
      const int x_lo = token_range(ref_x, u_lo, d_max).first;
      const int x_hi = token_range(ref_x, u_hi, d_max).second;
      const int y_lo = token_range(ref_y, lone.front()[0], d_max).first;
      const int y_hi = token_range(ref_y, lone.back()[0], d_max).second;
      for (int iy = y_lo; iy <= y_hi; ++iy) {
        const int wy0 = ref_y.begin[static_cast<std::size_t>(iy)];
        const int wy1 = ref_y.end[static_cast<std::size_t>(iy)];
        for (int ix = x_lo; ix <= x_hi; ++ix) {
          const int wx0 = ref_x.begin[static_cast<std::size_t>(ix)];
          const int wx1 = ref_x.end[static_cast<std::size_t>(ix)];
          long long best_d2 = std::numeric_limits<long long>::max();
          int best_du = 0;
          int best_dv = 0;
          for (std::size_t r = 0; r + 1 < row_start.size(); ++r) {
            const auto row_begin = lone.begin() + static_cast<std::ptrdiff_t>(row_start[r]);
            const auto row_end = lone.begin() + static_cast<std::ptrdiff_t>(row_start[r + 1]);
            const int dv = gap((*row_begin)[0], wy0, wy1);
            if (static_cast<long long>(dv) * dv >= best_d2) continue;
            // Nearest apex column to [wx0, wx1).
            const auto it = std::lower_bound(row_begin, row_end, std::array<int, 2>{(*row_begin)[0], wx0});
            int du = std::numeric_limits<int>::max();
            if (it != row_end) du = std::min(du, gap((*it)[1], wx0, wx1));
            if (it != row_begin) du = std::min(du, gap((*(it - 1))[1], wx0, wx1));
            const long long d2 = static_cast<long long>(du) * du + static_cast<long long>(dv) * dv;
            if (d2 < best_d2) {
              best_d2 = d2;
              best_du = du;
              best_dv = dv;
            }
          }
          const double k = heatmap_kernel(best_du, best_dv, d_max);
          double& b = best[static_cast<std::size_t>(iy * reference.width + ix)];
          if (k > b) b = k;
        }
      }
    }

    // Target pixels fed by several reference pixels: their cones add.
    for (const auto& [first, last] : summed) {
      {
        int u_lo = std::numeric_limits<int>::max(), u_hi = std::numeric_limits<int>::min();
        int v_lo = std::numeric_limits<int>::max(), v_hi = std::numeric_limits<int>::min();
        for (std::size_t s = first; s < last; ++s) {
          u_lo = std::min(u_lo, sources[s][0]);
          u_hi = std::max(u_hi, sources[s][0]);
          v_lo = std::min(v_lo, sources[s][1]);
          v_hi = std::max(v_hi, sources[s][1]);
        }
        const int x_lo = token_range(ref_x, u_lo, d_max).first;
        const int x_hi = token_range(ref_x, u_hi, d_max).second;
        const int y_lo = token_range(ref_y, v_lo, d_max).first;
        const int y_hi = token_range(ref_y, v_hi, d_max).second;
        const std::span<const std::array<int, 2>> cones(sources.data() + first, last - first);
        for (int iy = y_lo; iy <= y_hi; ++iy) {
          for (int ix = x_lo; ix <= x_hi; ++ix) {
            double& b = best[static_cast<std::size_t>(iy * reference.width + ix)];
            max_cone_sum(cones, ref_x.begin[static_cast<std::size_t>(ix)], ref_x.end[static_cast<std::size_t>(ix)],
                         ref_y.begin[static_cast<std::size_t>(iy)], ref_y.end[static_cast<std::size_t>(iy)], d_max,
                         upper, b);
          }
        }
      }
    }

    for (int i = 0; i < reference.count(); ++i) {
      out.values(j, i) = std::min(std::max(best[static_cast<std::size_t>(i)], params.l_min), upper);
    }
  });
  return out;
}

AttentionHeatmap build_heatmap(const FlowField& flow, const HeatmapParams& params, TokenGrid target,
                               TokenGrid reference) {
  AttentionHeatmap heatmap = correspondences_from_flow(flow, params);
  heatmap.dense = materialize_heatmap(heatmap, target, reference);
  return heatmap;
}

Eigen::MatrixXd biased_attention(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& self_keys,
                                 const Eigen::MatrixXd& self_values,
                                 std::span<const AttentionReference> references, double lambda_self) {
  const Eigen::Index n = queries.rows();
  const Eigen::Index d = queries.cols();
  const Eigen::Index dv = self_values.cols();
  if (self_keys.cols() != d || self_keys.rows() != self_values.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "self keys/values do not match the queries");
  }
  if (!(lambda_self > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda_self must be positive");
  Eigen::Index total_keys = self_keys.rows();
  for (const AttentionReference& ref : references) {
    if (ref.keys.cols() != d || ref.values.cols() != dv || ref.values.rows() != ref.keys.rows() ||
        ref.heatmap.rows() != n || ref.heatmap.cols() != ref.keys.rows()) {
      throw Error(ErrorCode::kDimensionMismatch, "reference keys/values/heatmap have inconsistent shapes");
    }
    if (ref.heatmap.size() > 0 && !(ref.heatmap.minCoeff() > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "heatmap entries must be positive");
    }
    total_keys += ref.keys.rows();
  }
  if (total_keys == 0) throw Error(ErrorCode::kDimensionMismatch, "attention needs at least one key");

  // Keys along rows so that every query's scores are one contiguous column.
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(d, 1)));
  Eigen::MatrixXd scores(total_keys, n);
  scores.topRows(self_keys.rows()) =
      ((self_keys * queries.transpose()) * inv_sqrt_d).array() + std::log(lambda_self);
  Eigen::Index row = self_keys.rows();
  for (const AttentionReference& ref : references) {
    scores.middleRows(row, ref.keys.rows()) =
        ((ref.keys * queries.transpose()) * inv_sqrt_d).array() + ref.heatmap.transpose().array().log();
    row += ref.keys.rows();
  }

  Eigen::MatrixXd values(total_keys, dv);
  values.topRows(self_values.rows()) = self_values;
  row = self_values.rows();
  for (const AttentionReference& ref : references) {
    values.middleRows(row, ref.values.rows()) = ref.values;
    row += ref.values.rows();
  }

  for (Eigen::Index q = 0; q < n; ++q) {
    auto column = scores.col(q);
    const double peak = column.maxCoeff();
    column = (column.array() - peak).exp();
    column /= column.sum();
  }
  return scores.transpose() * values;
}

Eigen::MatrixXd stack_heatmaps(std::span<const Eigen::MatrixXd> heatmaps) {
  if (heatmaps.empty()) return {};
  const Eigen::Index rows = heatmaps.front().rows();
  Eigen::Index cols = 0;
  for (const auto& h : heatmaps) {
    if (h.rows() != rows) throw Error(ErrorCode::kDimensionMismatch, "heatmaps disagree on target tokens");
    cols += h.cols();
  }
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index col = 0;
  for (const auto& h : heatmaps) {
    out.middleCols(col, h.cols()) = h;
    col += h.cols();
  }
  return out;
}

Eigen::MatrixXd mixing_matrix(const Eigen::MatrixXd& heatmap, double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  // Work on the transpose so each target token's row is contiguous.
  const Eigen::MatrixXd rows = heatmap.transpose();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.rows(), rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const auto row = rows.col(j);
    if (row.size() == 0) continue;
    Eigen::Index top = 0;
    const double first = row.maxCoeff(&top);
    double second = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      if (i != top) second = std::max(second, row(i));
    }
    if (temperature < 1e-6 && first - second > 1e-3) {
      out(top, j) = 1.0;
      continue;
    }
    auto e = out.col(j);
    e = ((row.array() - first) / temperature).exp().matrix();
    e /= e.sum();
  }
  return out.transpose();
}

Eigen::VectorXd injection_weights(const Eigen::MatrixXd& heatmap, double lambda_inject) {
  if (heatmap.cols() == 0) return Eigen::VectorXd::Zero(heatmap.rows());
  return heatmap.transpose().colwise().maxCoeff().transpose() * lambda_inject;
}

Eigen::MatrixXd inject_features(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& reference_hidden,
                                const Eigen::MatrixXd& mixing, const Eigen::VectorXd& weights) {
  if (mixing.rows() != hidden.rows() || mixing.cols() != reference_hidden.rows() ||
      reference_hidden.cols() != hidden.cols() || weights.size() != hidden.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "inject_features operands have inconsistent shapes");
  }
  if (weights.size() > 0 && !(weights.minCoeff() >= 0.0 && weights.maxCoeff() <= 1.0)) {
    throw Error(ErrorCode::kWeightOutOfRange, "injection weights must lie in [0, 1]");
  }
  const Eigen::MatrixXd mixed = mixing * reference_hidden;
  Eigen::MatrixXd out(hidden.rows(), hidden.cols());
  for (Eigen::Index j = 0; j < hidden.rows(); ++j) {
    out.row(j) = (1.0 - weights(j)) * hidden.row(j) + weights(j) * mixed.row(j);
  }
  return out;
}

}  // namespace viewstyle
