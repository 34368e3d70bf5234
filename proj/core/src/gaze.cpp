#include "gary/gaze.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gary/error.hpp"

namespace gary {

CalibrationModel CalibrationModel::identity(double screen_width_px, double screen_height_px) {
  CalibrationModel m;
  m.screen_width_px = screen_width_px;
  m.screen_height_px = screen_height_px;
  return m;
}

Point CalibrationModel::map(double x, double y) const {
  const std::array<double, 6> basis{1.0, x, y, x * x, y * y, x * y};
  Point p;
  for (std::size_t k = 0; k < 6; ++k) {
    p.x += x_coeffs[k] * basis[k];
    p.y += y_coeffs[k] * basis[k];
  }
  return p;
}

std::vector<Point> calibration_grid(double screen_width_px, double screen_height_px) {
  std::vector<Point> grid;
  grid.reserve(kCalibrationTargets);
  const double x0 = 0.1 * screen_width_px;
  const double y0 = 0.1 * screen_height_px;
  const double dx = 0.8 * screen_width_px / 3.0;
  const double dy = 0.8 * screen_height_px / 2.0;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 4; ++col) grid.push_back({x0 + col * dx, y0 + row * dy});
  }
  return grid;
}

namespace {

// Polynomial fitted in normalised coordinates u = a*x + bx, v = a*y + by is
// expanded back into raw-coordinate coefficients.
std::array<double, 6> to_raw_basis(const Eigen::Matrix<double, 6, 1>& d, double a, double bx, double by) {
  std::array<double, 6> c{};
  c[0] = d[0] + d[1] * bx + d[2] * by + d[3] * bx * bx + d[4] * by * by + d[5] * bx * by;
  c[1] = d[1] * a + 2.0 * d[3] * a * bx + d[5] * a * by;
  c[2] = d[2] * a + 2.0 * d[4] * a * by + d[5] * a * bx;
  c[3] = d[3] * a * a;
  c[4] = d[4] * a * a;
  c[5] = d[5] * a * a;
  return c;
}

bool targets_collinear(std::span<const CalibrationTarget> targets) {
  double mx = 0, my = 0;
  for (const auto& t : targets) {
    mx += t.target.x;
    my += t.target.y;
  }
  const auto n = static_cast<double>(targets.size());
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& t : targets) {
    const double dx = t.target.x - mx;
    const double dy = t.target.y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double det = sxx * syy - sxy * sxy;
  const double scale = (sxx + syy) * (sxx + syy);
  return scale == 0.0 || det <= 1e-12 * scale;
}

}  // namespace

CalibrationModel fit_calibration(std::span<const CalibrationTarget> targets, double screen_width_px,
                                 double screen_height_px) {
  if (targets.size() != kCalibrationTargets) {
    throw Error(ErrorCode::InsufficientSamples,
                "calibration needs exactly 12 targets, got " + std::to_string(targets.size()));
  }
  std::size_t rows = 0;
  double mx = 0, my = 0;
  for (const auto& t : targets) {
    std::size_t valid = 0;
    for (const auto& s : t.samples) {
      if (!s.valid) continue;
      ++valid;
      mx += s.x;
      my += s.y;
    }
    if (valid < kMinSamplesPerTarget) {
      throw Error(ErrorCode::InsufficientSamples, "fewer than 5 valid samples for a calibration target");
    }
    rows += valid;
  }
  if (targets_collinear(targets)) throw Error(ErrorCode::DegenerateGeometry, "calibration targets are collinear");

  mx /= static_cast<double>(rows);
  my /= static_cast<double>(rows);
  double spread = 0;
  for (const auto& t : targets) {
    for (const auto& s : t.samples) {
      if (s.valid) spread = std::max({spread, std::abs(s.x - mx), std::abs(s.y - my)});
    }
  }
  if (spread == 0.0) throw Error(ErrorCode::DegenerateGeometry, "raw samples do not span an area");
  const double a = 1.0 / spread;
  const double bx = -mx * a;
  const double by = -my * a;

  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows), 6);
  Eigen::MatrixXd rhs(static_cast<Eigen::Index>(rows), 2);
  Eigen::Index r = 0;
  for (const auto& t : targets) {
    for (const auto& s : t.samples) {
      if (!s.valid) continue;
      const double u = a * s.x + bx;
      const double v = a * s.y + by;
      design.row(r) << 1.0, u, v, u * u, v * v, u * v;
      rhs(r, 0) = t.target.x;
      rhs(r, 1) = t.target.y;
      ++r;
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6) throw Error(ErrorCode::DegenerateGeometry, "raw samples do not determine a quadratic map");
  const Eigen::MatrixXd coef = qr.solve(rhs);

  CalibrationModel model;
  model.screen_width_px = screen_width_px;
  model.screen_height_px = screen_height_px;
  model.x_coeffs = to_raw_basis(coef.col(0), a, bx, by);
  model.y_coeffs = to_raw_basis(coef.col(1), a, bx, by);

  double sq = 0;
  for (const auto& t : targets) {
    for (const auto& s : t.samples) {
      if (!s.valid) continue;
      const Point p = model.map(s.x, s.y);
      sq += (p.x - t.target.x) * (p.x - t.target.x) + (p.y - t.target.y) * (p.y - t.target.y);
    }
  }
  // Per-axis RMS: pooled over both coordinates, comparable with a per-axis sigma.
  model.rms_error_px = std::sqrt(sq / (2.0 * static_cast<double>(rows)));
  return model;
}

std::optional<Point> apply_calibration(const CalibrationModel& model, const RawGazeSample& s) {
  if (!s.valid) return std::nullopt;
  const Point p = model.map(s.x, s.y);
  const double w = model.screen_width_px;
  const double h = model.screen_height_px;
  if (!(p.x >= -0.5 * w && p.x <= 1.5 * w && p.y >= -0.5 * h && p.y <= 1.5 * h)) return std::nullopt;
  return p;
}

ScreenSample calibrate_sample(const CalibrationModel& model, const RawGazeSample& s) {
  const auto p = apply_calibration(model, s);
  return {s.t_ms, p.value_or(Point{}), p.has_value()};
}

// ---------------------------------------------------------------------------

FixationStream::FixationStream(FixationParams params, double refresh_ms)
    : params_(params), refresh_ms_(refresh_ms) {}

void FixationStream::reset() {
  window_.clear();
  min_x_.clear();
  max_x_.clear();
  min_y_.clear();
  max_y_.clear();
  head_ = 0;
  qualified_ = false;
}

double FixationStream::dispersion() const {
  if (window_.empty()) return 0.0;
  const auto at = [&](std::size_t abs) -> const Entry& { return window_[abs - head_]; };
  return (at(max_x_.front()).pos.x - at(min_x_.front()).pos.x) +
         (at(max_y_.front()).pos.y - at(min_y_.front()).pos.y);
}

Fixation FixationStream::current(std::size_t count) const {
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < count; ++k) {
    sx += window_[k].pos.x;
    sy += window_[k].pos.y;
  }
  const auto n = static_cast<double>(count);
  return {window_.front().t_ms, window_[count - 1].t_ms - window_.front().t_ms, {sx / n, sy / n}};
}

void FixationStream::pop_front() {
  for (auto* dq : {&min_x_, &max_x_, &min_y_, &max_y_}) {
    if (!dq->empty() && dq->front() == head_) dq->pop_front();
  }
  window_.pop_front();
  ++head_;
}

void FixationStream::close_into(std::vector<Report>& out, std::size_t count) {
  if (qualified_ && count > 0) out.push_back({Phase::Closed, current(count)});
}

std::vector<FixationStream::Report> FixationStream::push(const ScreenSample& s) {
  if (last_t_ && !(s.t_ms > *last_t_)) {
    throw Error(ErrorCode::InvalidArgument, "gaze timestamps must be strictly increasing");
  }
  last_t_ = s.t_ms;

  std::vector<Report> out;
  if (!s.valid) {
    close_into(out, window_.size());
    reset();
    return out;
  }

  const std::size_t idx = head_ + window_.size();
  window_.push_back({s.t_ms, s.pos});
  const auto push_mono = [&](std::deque<std::size_t>& dq, auto better) {
    while (!dq.empty() && !better(window_[dq.back() - head_], window_.back())) dq.pop_back();
    dq.push_back(idx);
  };
  push_mono(min_x_, [](const Entry& kept, const Entry& add) { return kept.pos.x < add.pos.x; });
  push_mono(max_x_, [](const Entry& kept, const Entry& add) { return kept.pos.x > add.pos.x; });
  push_mono(min_y_, [](const Entry& kept, const Entry& add) { return kept.pos.y < add.pos.y; });
  push_mono(max_y_, [](const Entry& kept, const Entry& add) { return kept.pos.y > add.pos.y; });

  while (dispersion() > params_.dispersion_px) {
    if (qualified_) {
      close_into(out, window_.size() - 1);
      while (window_.size() > 1) pop_front();
      qualified_ = false;
      break;
    }
    pop_front();
  }

  const double span = window_.back().t_ms - window_.front().t_ms;
  if (!qualified_ && span >= params_.min_duration_ms) {
    qualified_ = true;
    last_report_ms_ = s.t_ms;
    out.push_back({Phase::Onset, current(window_.size())});
  } else if (qualified_ && s.t_ms - last_report_ms_ >= refresh_ms_) {
    last_report_ms_ = s.t_ms;
    out.push_back({Phase::Ongoing, current(window_.size())});
  }
  return out;
}

std::vector<FixationStream::Report> FixationStream::finish() {
  std::vector<Report> out;
  close_into(out, window_.size());
  reset();
  return out;
}

std::vector<Fixation> detect_fixations(std::span<const ScreenSample> stream, const FixationParams& params) {
  FixationStream detector(params);
  std::vector<Fixation> fixations;
  const auto collect = [&](const std::vector<FixationStream::Report>& reports) {
    for (const auto& r : reports) {
      if (r.phase == FixationStream::Phase::Closed) fixations.push_back(r.fixation);
    }
  };
  for (const ScreenSample& s : stream) collect(detector.push(s));
  collect(detector.finish());
  return fixations;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const CalibrationModel& m) {
  j = {{"x_coeffs", m.x_coeffs},
       {"y_coeffs", m.y_coeffs},
       {"rms_error_px", m.rms_error_px},
       {"screen_width_px", m.screen_width_px},
       {"screen_height_px", m.screen_height_px}};
}

void from_json(const nlohmann::json& j, CalibrationModel& m) {
  m.x_coeffs = j.at("x_coeffs").get<std::array<double, 6>>();
  m.y_coeffs = j.at("y_coeffs").get<std::array<double, 6>>();
  m.rms_error_px = j.at("rms_error_px").get<double>();
  m.screen_width_px = j.at("screen_width_px").get<double>();
  m.screen_height_px = j.at("screen_height_px").get<double>();
}

void to_json(nlohmann::json& j, const Fixation& f) {
  j = {{"start_ms", f.start_ms}, {"duration_ms", f.duration_ms}, {"x", f.centroid.x}, {"y", f.centroid.y}};
}

void from_json(const nlohmann::json& j, Fixation& f) {
  f.start_ms = j.at("start_ms").get<double>();
  f.duration_ms = j.at("duration_ms").get<double>();
  f.centroid = {j.at("x").get<double>(), j.at("y").get<double>()};
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidArgument, "bad number on gaze CSV line " + std::to_string(line));
  }
  return v;
}

}  // namespace

void write_gaze_csv(std::ostream& out, std::span<const RawGazeSample> samples) {
  out << "t_ms,x,y,valid\n";
  for (const auto& s : samples) {
    out << format_double(s.t_ms) << ',' << format_double(s.x) << ',' << format_double(s.y) << ','
        << (s.valid ? 1 : 0) << '\n';
  }
}

std::vector<RawGazeSample> read_gaze_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t_ms,x,y,valid") {
    throw Error(ErrorCode::InvalidArgument, "gaze CSV must start with header t_ms,x,y,valid");
  }
  std::vector<RawGazeSample> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string_view rest = line;
    std::array<std::string_view, 4> fields;
    for (std::size_t k = 0; k < 4; ++k) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (k == 3)) {
        throw Error(ErrorCode::InvalidArgument, "expected 4 fields on gaze CSV line " + std::to_string(lineno));
      }
      fields[k] = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    RawGazeSample s;
    s.t_ms = parse_double(fields[0], lineno);
    s.x = parse_double(fields[1], lineno);
    s.y = parse_double(fields[2], lineno);
    if (fields[3] == "1" || fields[3] == "true") {
      s.valid = true;
    } else if (fields[3] == "0" || fields[3] == "false") {
      s.valid = false;
    } else {
      throw Error(ErrorCode::InvalidArgument, "bad valid flag on gaze CSV line " + std::to_string(lineno));
    }
    if (!samples.empty() && !(s.t_ms > samples.back().t_ms)) {
      throw Error(ErrorCode::InvalidArgument, "gaze CSV timestamps must be strictly increasing");
    }
    samples.push_back(s);
  }
  return samples;
}

}  // namespace gary
