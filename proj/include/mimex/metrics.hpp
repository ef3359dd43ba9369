#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mimex/errors.hpp"
#include "mimex/rng.hpp"

namespace mimex {

// 2D visitation histogram over (x, y). The extent grows to fit whatever is
// recorded; one recorded point lands in exactly one bin.
class VisitationGrid {
 public:
  explicit VisitationGrid(double bin_width) : bin_(bin_width) {
    if (bin_width <= 0.0) throw ConfigError("visitation grid: bin width must be positive");
  }

  double bin_width() const { return bin_; }
  std::uint64_t total() const { return total_; }
  bool empty() const { return cells_.empty(); }

  void record(double x, double y) {
    std::int64_t i = bin_index(x);
    std::int64_t j = bin_index(y);
    ++cells_[{i, j}];
    ++total_;
    min_i_ = std::min(min_i_, i);
    max_i_ = std::max(max_i_, i);
    min_j_ = std::min(min_j_, j);
    max_j_ = std::max(max_j_, j);
  }

  std::uint64_t count_at(std::int64_t i, std::int64_t j) const {
    auto it = cells_.find({i, j});
    return it == cells_.end() ? 0 : it->second;
  }

  std::uint64_t max_count() const {
    std::uint64_t m = 0;
    for (const auto& [cell, n] : cells_) m = std::max(m, n);
    return m;
  }

  // inclusive index bounds of the touched region; meaningless when empty
  std::int64_t min_i() const { return min_i_; }
  std::int64_t max_i() const { return max_i_; }
  std::int64_t min_j() const { return min_j_; }
  std::int64_t max_j() const { return max_j_; }

  std::int64_t bin_index(double v) const { return std::int64_t(std::floor(v / bin_)); }

 private:
  double bin_;
  std::uint64_t total_ = 0;
  std::int64_t min_i_ = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_i_ = std::numeric_limits<std::int64_t>::min();
  std::int64_t min_j_ = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_j_ = std::numeric_limits<std::int64_t>::min();
  std::map<std::pair<std::int64_t, std::int64_t>, std::uint64_t> cells_;
};

inline void record_visitation(VisitationGrid& grid,
                              std::span<const std::array<double, 2>> trajectory) {
  for (const auto& p : trajectory) grid.record(p[0], p[1]);
}

// Fraction of steps whose radial coordinate lies in [radius - tol, radius + tol].
inline double boundary_occupancy(std::span<const std::array<double, 2>> trajectory, double radius,
                                 double tolerance) {
  if (trajectory.empty()) throw ShapeError("boundary_occupancy: empty trajectory");
  std::size_t hits = 0;
  for (const auto& p : trajectory) {
    double r = std::hypot(p[0], p[1]);
    if (std::abs(r - radius) <= tolerance) ++hits;
  }
  return double(hits) / double(trajectory.size());
}

// Fraction of steps spent in the TV room, using the rooms planar layout where
// the main rooms occupy rows [0, 8) and the TV corridor sits alone on row 9.
inline double tv_room_occupancy(std::span<const std::array<double, 2>> trajectory) {
  if (trajectory.empty()) throw ShapeError("tv_room_occupancy: empty trajectory");
  std::size_t hits = 0;
  for (const auto& p : trajectory) {
    if (p[0] > 8.5) ++hits;
  }
  return double(hits) / double(trajectory.size());
}

// Everything one training run reports. wall_clock_seconds is informational
// only and deliberately left out of the digest.
struct RunMetrics {
  std::uint64_t seed = 0;
  std::string env;
  std::string method;
  std::uint64_t steps = 0;
  std::optional<std::uint64_t> steps_to_first_reward;
  bool reached_goal = false;
  double boundary_occupancy = 0.0;  // wormhole runs
  double tv_occupancy = 0.0;        // rooms runs
  std::vector<double> episode_returns;
  std::vector<double> extrinsic_mean_series;  // per training iteration
  std::vector<double> intrinsic_mean_series;  // per training iteration
  double wall_clock_seconds = 0.0;
  std::string error;  // non-empty when the run aborted

  std::uint64_t digest() const {
    std::uint64_t h = fnv1a64(env);
    h = fnv1a64(method, h);
    h = mix(h, seed);
    h = mix(h, steps);
    h = mix(h, steps_to_first_reward ? *steps_to_first_reward + 1 : 0);
    h = mix(h, reached_goal ? 1 : 0);
    h = mix(h, bits(boundary_occupancy));
    h = mix(h, bits(tv_occupancy));
    for (double v : episode_returns) h = mix(h, bits(v));
    for (double v : extrinsic_mean_series) h = mix(h, bits(v));
    for (double v : intrinsic_mean_series) h = mix(h, bits(v));
    h = fnv1a64(error, h);
    return h;
  }

 private:
  static std::uint64_t bits(double v) {
    std::uint64_t b;
    std::memcpy(&b, &v, sizeof(b));
    return b;
  }
  static std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

// Mean and sample standard deviation of one scalar metric across seeds.
struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;     // values that entered the mean
  std::size_t censored = 0;  // runs with no value (budget exhausted)
};

inline MetricSummary summarize(std::span<const double> values, std::size_t censored = 0) {
  MetricSummary s;
  s.count = values.size();
  s.censored = censored;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= double(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / double(values.size() - 1));
  }
  return s;
}

// Median over all seeds where a censored run counts as +infinity; empty
// optional when the median itself is censored.
inline std::optional<double> median_steps_to_first_reward(std::span<const RunMetrics> runs) {
  std::vector<double> v;
  for (const RunMetrics& r : runs) {
    v.push_back(r.steps_to_first_reward ? double(*r.steps_to_first_reward)
                                        : std::numeric_limits<double>::infinity());
  }
  std::sort(v.begin(), v.end());
  double med;
  std::size_t n = v.size();
  if (n % 2 == 1) {
    med = v[n / 2];
  } else {
    med = 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  if (!std::isfinite(med)) return std::nullopt;
  return med;
}

struct SeedAggregate {
  MetricSummary steps_to_first_reward;  // censored runs excluded from the mean
  std::optional<double> median_steps_to_first_reward;
  MetricSummary boundary_occupancy;
  MetricSummary tv_occupancy;
  std::size_t goal_seeds = 0;  // seeds that saw any extrinsic reward
  std::size_t total_seeds = 0;
  std::vector<double> extrinsic_series_mean;  // aligned by iteration, shortest run
  std::vector<double> extrinsic_series_std;
  std::vector<double> intrinsic_series_mean;
  std::vector<double> intrinsic_series_std;
};

inline SeedAggregate aggregate_seeds(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw ShapeError("aggregate_seeds: no runs");
  SeedAggregate agg;
  agg.total_seeds = runs.size();

  std::vector<double> first, boundary, tv;
  std::size_t censored = 0;
  for (const RunMetrics& r : runs) {
    if (r.steps_to_first_reward) {
      first.push_back(double(*r.steps_to_first_reward));
    } else {
      ++censored;
    }
    boundary.push_back(r.boundary_occupancy);
    tv.push_back(r.tv_occupancy);
    if (r.reached_goal) ++agg.goal_seeds;
  }
  agg.steps_to_first_reward = summarize(first, censored);
  agg.median_steps_to_first_reward = median_steps_to_first_reward(runs);
  agg.boundary_occupancy = summarize(boundary);
  agg.tv_occupancy = summarize(tv);

  auto align = [&](auto series_of, std::vector<double>& mean_out, std::vector<double>& std_out) {
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const RunMetrics& r : runs) len = std::min(len, series_of(r).size());
    if (len == std::numeric_limits<std::size_t>::max()) len = 0;
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<double> column;
      for (const RunMetrics& r : runs) column.push_back(series_of(r)[t]);
      MetricSummary s = summarize(column);
      mean_out.push_back(s.mean);
      std_out.push_back(s.stddev);
    }
  };
  align([](const RunMetrics& r) -> const std::vector<double>& { return r.extrinsic_mean_series; },
        agg.extrinsic_series_mean, agg.extrinsic_series_std);
  align([](const RunMetrics& r) -> const std::vector<double>& { return r.intrinsic_mean_series; },
        agg.intrinsic_series_mean, agg.intrinsic_series_std);
  return agg;
}

namespace detail {

inline std::string format_double(double v) {
  std::array<char, 32> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw NumericError("format_double: conversion failed");
  return std::string(buf.data(), end);
}

}  // namespace detail

// Writes <stem>.txt (space-delimited count matrix, one row per y bin from low
// to high) and <stem>.pgm (log-scaled portable graymap, image rows from high
// y to low so the image is upright). Both outputs are byte-deterministic.
inline void emit_heatmap(const VisitationGrid& grid, const std::filesystem::path& stem) {
  if (grid.empty()) throw ShapeError("emit_heatmap: empty grid");
  std::int64_t w = grid.max_j() - grid.min_j() + 1;
  std::int64_t h = grid.max_i() - grid.min_i() + 1;

  std::ofstream txt(stem.string() + ".txt");
  if (!txt) throw IoError("emit_heatmap: cannot write " + stem.string() + ".txt");
  for (std::int64_t j = grid.min_j(); j <= grid.max_j(); ++j) {
    for (std::int64_t i = grid.min_i(); i <= grid.max_i(); ++i) {
      if (i != grid.min_i()) txt << ' ';
      txt << grid.count_at(i, j);
    }
    txt << '\n';
  }

  double max_level = std::log10(1.0 + double(grid.max_count()));
  std::ofstream pgm(stem.string() + ".pgm");
  if (!pgm) throw IoError("emit_heatmap: cannot write " + stem.string() + ".pgm");
  pgm << "P2\n" << w << ' ' << h << "\n255\n";
  for (std::int64_t j = grid.max_j(); j >= grid.min_j(); --j) {
    for (std::int64_t i = grid.min_i(); i <= grid.max_i(); ++i) {
      int level = 0;
      std::uint64_t c = grid.count_at(i, j);
      if (c > 0 && max_level > 0.0) {
        level = int(std::lround(255.0 * std::log10(1.0 + double(c)) / max_level));
      }
      if (i != grid.min_i()) pgm << ' ';
      pgm << level;
    }
    pgm << '\n';
  }
}

// One row per training iteration: iteration, mean extrinsic, mean intrinsic.
inline void emit_series_csv(const RunMetrics& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("emit_series_csv: cannot write " + path.string());
  out << "iteration,extrinsic_mean,intrinsic_mean\n";
  for (std::size_t i = 0; i < m.extrinsic_mean_series.size(); ++i) {
    out << i << ',' << detail::format_double(m.extrinsic_mean_series[i]) << ','
        << detail::format_double(m.intrinsic_mean_series[i]) << '\n';
  }
}

}  // namespace mimex
