#include "apexcvx/track.hpp"

#include "apexcvx/spline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace apexcvx {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr const char* kTrackHeader = "s_ref,x_ref,y_ref,z_ref,Nx,Ny,Nz,n_min,n_max";

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

double parse_double(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
    field.remove_prefix(1);
  }
  while (!field.empty() &&
         (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw TrackError("malformed track file: bad number '" + std::string(field) +
                     "' on line " + std::to_string(line));
  }
  return value;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

// Five-point stencils. `f` holds `count` distinct samples at spacing h.
template <class T>
void five_point(const std::vector<T>& f, std::size_t count, bool periodic, double h,
                std::vector<T>& d1, std::vector<T>& d2) {
  d1.assign(f.size(), T{});
  d2.assign(f.size(), T{});
  const double c1 = 1.0 / (12.0 * h);
  const double c2 = 1.0 / (12.0 * h * h);
  auto at = [&](std::ptrdiff_t i) -> const T& {
    const auto m = static_cast<std::ptrdiff_t>(count);
    return f[static_cast<std::size_t>(((i % m) + m) % m)];
  };
  for (std::size_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::ptrdiff_t>(k);
    if (periodic || (k >= 2 && k + 2 < count)) {
      d1[k] = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) * c1;
      d2[k] = (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) -
               at(i - 2)) *
              c2;
      continue;
    }
    // One-sided stencils; mirrored at the far end (odd derivative flips sign).
    const bool head = k < 2;
    const std::size_t off = head ? k : count - 1 - k;
    const double sgn = head ? 1.0 : -1.0;
    auto g = [&](std::size_t j) -> const T& {
      return head ? f[j] : f[count - 1 - j];
    };
    if (off == 0) {
      d1[k] = sgn * (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) -
                     3.0 * g(4)) *
              c1;
      d2[k] = (35.0 * g(0) - 104.0 * g(1) + 114.0 * g(2) - 56.0 * g(3) +
               11.0 * g(4)) *
              c2;
    } else {
      d1[k] = sgn * (-3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)) *
              c1;
      d2[k] = (11.0 * g(0) - 20.0 * g(1) + 6.0 * g(2) + 4.0 * g(3) - g(4)) * c2;
    }
  }
  if (periodic && f.size() > count) {
    d1.back() = d1.front();
    d2.back() = d2.front();
  }
}

Vec3 left_normal(double heading) { return {-std::sin(heading), std::cos(heading), 0.0}; }

void fill_bounds(TrackRibbon& t, double half_width) {
  t.n_min.assign(t.size(), -half_width);
  t.n_max.assign(t.size(), half_width);
}

// Planar curve given by heading-integrated segments (s-bend, oval).
struct Segment {
  double length;
  double curvature;  // signed, left positive
};

TrackRibbon sample_segments(const std::vector<Segment>& segs, Vec3 start,
                            double heading0, std::size_t intervals, bool closed) {
  double total = 0.0;
  for (const auto& s : segs) total += s.length;
  TrackRibbon t;
  t.closed = closed;
  t.s_ref.resize(intervals + 1);
  t.P.resize(intervals + 1);
  t.N.resize(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double s = total * static_cast<double>(i) / static_cast<double>(intervals);
    t.s_ref[i] = s;
    Vec3 p = start;
    double psi = heading0;
    double remaining = s;
    for (const auto& seg : segs) {
      const double ds = std::min(remaining, seg.length);
      if (seg.curvature == 0.0) {
        p += ds * Vec3(std::cos(psi), std::sin(psi), 0.0);
      } else {
        const double r = 1.0 / seg.curvature;
        const double psi1 = psi + ds * seg.curvature;
        p += Vec3(r * (std::sin(psi1) - std::sin(psi)),
                  -r * (std::cos(psi1) - std::cos(psi)), 0.0);
        psi = psi1;
      }
      remaining -= ds;
      if (remaining <= 0.0) break;
    }
    t.P[i] = p;
    t.N[i] = left_normal(psi);
  }
  t.s_ref.back() = total;
  if (closed) {
    t.P.back() = t.P.front();
    t.N.back() = t.N.front();
  }
  return t;
}

TrackRibbon make_corners(const TestTrackParams& p) {
  // Polar curve r(psi) = R0 (1 + sum a_j sin(k_j psi + phase_j)).
  std::mt19937 rng(p.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  struct Harmonic {
    double a, k, ph;
  };
  std::vector<Harmonic> hs;
  const double k_main = std::max(1, p.corners / 2);
  hs.push_back({p.amplitude, k_main, phase(rng)});
  hs.push_back({0.04 * jitter(rng), 2.0, phase(rng)});
  hs.push_back({0.02 * jitter(rng), 3.0, phase(rng)});
  hs.push_back({0.3 * p.amplitude * jitter(rng), std::max(1.0, k_main - 4.0), phase(rng)});
  const double R0 = p.mean_radius;
  auto radius = [&](double psi) {
    double r = 1.0;
    for (const auto& h : hs) r += h.a * std::sin(h.k * psi + h.ph);
    return R0 * r;
  };
  auto dradius = [&](double psi) {
    double r = 0.0;
    for (const auto& h : hs) r += h.a * h.k * std::cos(h.k * psi + h.ph);
    return R0 * r;
  };
  auto speed = [&](double psi) { return std::hypot(radius(psi), dradius(psi)); };

  // Cumulative arc length on a fine grid (composite Simpson per cell).
  const std::size_t fine = std::max<std::size_t>(20000, 40 * p.samples);
  std::vector<double> psi(fine + 1), arc(fine + 1, 0.0);
  const double dpsi = 2.0 * kPi / static_cast<double>(fine);
  for (std::size_t j = 0; j <= fine; ++j) psi[j] = dpsi * static_cast<double>(j);
  for (std::size_t j = 1; j <= fine; ++j) {
    const double a = psi[j - 1];
    arc[j] = arc[j - 1] +
             dpsi / 6.0 * (speed(a) + 4.0 * speed(a + 0.5 * dpsi) + speed(psi[j]));
  }
  const double total = arc.back();
  // psi(s) - s * 2pi / total is periodic, which keeps the inverse spline smooth.
  std::vector<double> resid(fine + 1);
  for (std::size_t j = 0; j <= fine; ++j) resid[j] = psi[j] - arc[j] * 2.0 * kPi / total;
  resid.back() = resid.front();
  CubicSpline inverse(arc, resid, true);

  TrackRibbon t;
  t.closed = true;
  const std::size_t n = p.samples;
  t.s_ref.resize(n + 1);
  t.P.resize(n + 1);
  t.N.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = total * static_cast<double>(i) / static_cast<double>(n);
    double q = s * 2.0 * kPi / total + inverse(s);
    // Newton polish on the arc-length equation.
    for (int it = 0; it < 3; ++it) {
      const auto j = std::min<std::size_t>(fine - 1, static_cast<std::size_t>(q / dpsi));
      const double a = psi[j];
      const double b = q;
      const double seg = (b - a) / 6.0 * (speed(a) + 4.0 * speed(0.5 * (a + b)) + speed(b));
      const double err = arc[j] + seg - s;
      q -= err / speed(q);
    }
    const double r = radius(q);
    const double dr = dradius(q);
    t.s_ref[i] = s;
    t.P[i] = Vec3(r * std::cos(q), r * std::sin(q), 0.0);
    const Vec3 tangent = Vec3(dr * std::cos(q) - r * std::sin(q),
                              dr * std::sin(q) + r * std::cos(q), 0.0)
                             .normalized();
    t.N[i] = Vec3(-tangent.y(), tangent.x(), 0.0);
  }
  t.s_ref.back() = total;
  t.P.back() = t.P.front();
  t.N.back() = t.N.front();
  return t;
}

}  // namespace

void validate_track(TrackRibbon& track, double vehicle_width) {
  const std::size_t n = track.size();
  if (n < 2) throw TrackError("track needs at least 2 samples");
  if (track.P.size() != n || track.N.size() != n || track.n_min.size() != n ||
      track.n_max.size() != n) {
    throw TrackError("track arrays differ in length");
  }
  if (std::abs(track.s_ref.front()) > 1e-12) {
    throw TrackError("s_ref must start at 0");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(track.s_ref[i] > track.s_ref[i - 1])) {
      throw TrackError("s_ref not strictly increasing at sample " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = track.N[i].norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
      throw TrackError("non-unit normal at sample " + std::to_string(i));
    }
    track.N[i] /= norm;
    const double lo = track.n_min[i] + vehicle_width;
    const double hi = track.n_max[i] - vehicle_width;
    if (!(lo < hi)) {
      throw TrackError("corridor empty at sample " + std::to_string(i));
    }
  }
  if (track.closed && (track.P.front() - track.P.back()).norm() > 1e-6) {
    throw TrackError("closed track does not close: first and last points differ");
  }
}

TrackRibbon load_track(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw TrackError("cannot open track file " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw TrackError("malformed track file: empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kTrackHeader) {
    throw TrackError("malformed track file: expected header '" +
                     std::string(kTrackHeader) + "'");
  }
  TrackRibbon t;
  t.name = csv_path.stem().string();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::array<double, 9> v{};
    std::size_t col = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field =
          std::string_view(line).substr(start, comma == std::string::npos
                                                   ? std::string::npos
                                                   : comma - start);
      if (col >= v.size()) {
        throw TrackError("malformed track file: too many columns on line " +
                         std::to_string(lineno));
      }
      v[col++] = parse_double(field, lineno);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (col != v.size()) {
      throw TrackError("malformed track file: expected 9 columns on line " +
                       std::to_string(lineno));
    }
    t.s_ref.push_back(v[0]);
    t.P.emplace_back(v[1], v[2], v[3]);
    t.N.emplace_back(v[4], v[5], v[6]);
    t.n_min.push_back(v[7]);
    t.n_max.push_back(v[8]);
  }
  const auto meta_path = sidecar_path(csv_path);
  bool have_closed = false;
  if (std::filesystem::exists(meta_path)) {
    std::ifstream mi(meta_path);
    nlohmann::json meta;
    try {
      mi >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw TrackError("malformed track sidecar: " + std::string(e.what()));
    }
    if (meta.contains("name")) t.name = meta.at("name").get<std::string>();
    if (meta.contains("closed")) {
      t.closed = meta.at("closed").get<bool>();
      have_closed = true;
    }
  }
  if (!have_closed) {
    t.closed = t.size() > 2 && (t.P.front() - t.P.back()).norm() <= 1e-6;
  }
  validate_track(t);
  return t;
}

void save_track(const TrackRibbon& track, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw TrackError("cannot write track file " + csv_path.string());
  out << kTrackHeader << '\n';
  for (std::size_t i = 0; i < track.size(); ++i) {
    const Vec3& p = track.P[i];
    const Vec3& nv = track.N[i];
    out << format_double(track.s_ref[i]) << ',' << format_double(p.x()) << ','
        << format_double(p.y()) << ',' << format_double(p.z()) << ','
        << format_double(nv.x()) << ',' << format_double(nv.y()) << ','
        << format_double(nv.z()) << ',' << format_double(track.n_min[i]) << ','
        << format_double(track.n_max[i]) << '\n';
  }
  nlohmann::json meta = {{"name", track.name}, {"closed", track.closed}};
  std::ofstream mo(sidecar_path(csv_path), std::ios::binary);
  mo << meta.dump(2) << '\n';
}

TrackRibbon resample_track(const TrackRibbon& track, std::size_t intervals) {
  if (intervals < 4) throw TrackError("resampling needs at least 4 intervals");
  const std::size_t n = track.size();
  if (n < 3) throw TrackError("resampling needs at least 3 samples");
  const bool periodic = track.closed;
  std::array<std::vector<double>, 6> comp;
  for (auto& c : comp) c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      comp[k][i] = track.P[i][k];
      comp[3 + k][i] = track.N[i][k];
    }
  }
  std::vector<CubicSpline> splines;
  splines.reserve(6);
  for (auto& c : comp) {
    if (periodic) c.back() = c.front();
    splines.emplace_back(track.s_ref, c, periodic);
  }
  TrackRibbon out;
  out.name = track.name;
  out.closed = track.closed;
  const double S = track.length();
  out.s_ref.resize(intervals + 1);
  out.P.resize(intervals + 1);
  out.N.resize(intervals + 1);
  out.n_min.resize(intervals + 1);
  out.n_max.resize(intervals + 1);
  std::size_t seg = 0;
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double s = S * static_cast<double>(i) / static_cast<double>(intervals);
    out.s_ref[i] = s;
    for (int k = 0; k < 3; ++k) {
      out.P[i][k] = splines[k](s);
      out.N[i][k] = splines[3 + k](s);
    }
    out.N[i].normalize();
    while (seg + 2 < n && track.s_ref[seg + 1] < s) ++seg;
    const double s0 = track.s_ref[seg];
    const double s1 = track.s_ref[seg + 1];
    const double w = std::clamp((s - s0) / (s1 - s0), 0.0, 1.0);
    out.n_min[i] = (1.0 - w) * track.n_min[seg] + w * track.n_min[seg + 1];
    out.n_max[i] = (1.0 - w) * track.n_max[seg] + w * track.n_max[seg + 1];
  }
  out.s_ref.back() = S;
  if (periodic) {
    out.P.back() = out.P.front();
    out.N.back() = out.N.front();
    out.n_min.back() = out.n_min.front();
    out.n_max.back() = out.n_max.front();
  }
  return out;
}

TrackKind parse_track_kind(const std::string& name) {
  if (name == "straight") return TrackKind::straight;
  if (name == "circle") return TrackKind::circle;
  if (name == "oval") return TrackKind::oval;
  if (name == "s-bend" || name == "s_bend") return TrackKind::s_bend;
  if (name == "corners") return TrackKind::corners;
  throw TrackError("unknown track kind '" + name + "'");
}

std::string to_string(TrackKind kind) {
  switch (kind) {
    case TrackKind::straight: return "straight";
    case TrackKind::circle: return "circle";
    case TrackKind::oval: return "oval";
    case TrackKind::s_bend: return "s-bend";
    case TrackKind::corners: return "corners";
  }
  return "unknown";
}

TrackRibbon make_test_track(const TestTrackParams& p) {
  if (p.samples < 4) throw TrackError("test track needs at least 4 intervals");
  if (!(p.half_width > 0.0)) throw TrackError("corridor half width must be positive");
  const bool needs_radius = p.kind != TrackKind::straight;
  const double r = p.kind == TrackKind::corners ? p.mean_radius : p.radius;
  if (needs_radius && !(r > 0.0)) {
    throw TrackError("degenerate geometry: radius must be positive");
  }
  if ((p.kind == TrackKind::straight || p.kind == TrackKind::oval ||
       p.kind == TrackKind::s_bend) &&
      !(p.length > 0.0)) {
    throw TrackError("degenerate geometry: length must be positive");
  }
  TrackRibbon t;
  const std::size_t n = p.samples;
  switch (p.kind) {
    case TrackKind::straight: {
      const double alpha = std::atan(p.grade);
      const Vec3 dir(std::cos(alpha), 0.0, std::sin(alpha));
      t.closed = false;
      for (std::size_t i = 0; i <= n; ++i) {
        const double s = p.length * static_cast<double>(i) / static_cast<double>(n);
        t.s_ref.push_back(s);
        t.P.push_back(s * dir);
        t.N.emplace_back(0.0, 1.0, 0.0);
      }
      t.s_ref.back() = p.length;
      t.P.back() = p.length * dir;
      break;
    }
    case TrackKind::circle: {
      const double R = p.radius;
      const double beta = p.bank_deg * kPi / 180.0;
      const double S = 2.0 * kPi * R;
      t.closed = true;
      for (std::size_t i = 0; i <= n; ++i) {
        const double s = S * static_cast<double>(i) / static_cast<double>(n);
        const double a = s / R;
        t.s_ref.push_back(s);
        t.P.emplace_back(R * std::cos(a), R * std::sin(a), 0.0);
        const Vec3 inward(-std::cos(a), -std::sin(a), 0.0);
        t.N.push_back(std::cos(beta) * inward - std::sin(beta) * Vec3::UnitZ());
      }
      t.s_ref.back() = S;
      t.P.back() = t.P.front();
      t.N.back() = t.N.front();
      break;
    }
    case TrackKind::oval: {
      const double k = 1.0 / p.radius;
      const std::vector<Segment> segs = {{p.length, 0.0},
                                         {kPi * p.radius, k},
                                         {p.length, 0.0},
                                         {kPi * p.radius, k}};
      t = sample_segments(segs, Vec3(-0.5 * p.length, -p.radius, 0.0), 0.0, n, true);
      break;
    }
    case TrackKind::s_bend: {
      const double k = 1.0 / p.radius;
      const double arc = p.radius * p.arc_deg * kPi / 180.0;
      const std::vector<Segment> segs = {
          {0.5 * p.length, 0.0}, {arc, k}, {arc, -k}, {0.5 * p.length, 0.0}};
      t = sample_segments(segs, Vec3::Zero(), 0.0, n, false);
      break;
    }
    case TrackKind::corners: {
      if (p.corners < 2) throw TrackError("corners track needs at least 2 corners");
      t = make_corners(p);
      break;
    }
  }
  t.name = to_string(p.kind);
  fill_bounds(t, p.half_width);
  validate_track(t, p.vehicle_width);
  return t;
}

RibbonDerivatives differentiate_ribbon(const TrackRibbon& track) {
  const std::size_t count = track.unique_size();
  if (count < 5) throw TrackError("differentiation needs at least 5 samples");
  const double h = track.length() / static_cast<double>(track.size() - 1);
  for (std::size_t i = 1; i < track.size(); ++i) {
    const double ds = track.s_ref[i] - track.s_ref[i - 1];
    if (std::abs(ds - h) > 1e-6 * h) {
      throw TrackError("differentiation needs a uniform s_ref grid; resample first");
    }
  }
  RibbonDerivatives d;
  five_point(track.P, count, track.closed, h, d.dP, d.ddP);
  five_point(track.N, count, track.closed, h, d.dN, d.ddN);
  return d;
}

void differentiate_samples(const std::vector<double>& f, std::size_t count, bool periodic,
                           double h, std::vector<double>& d1, std::vector<double>& d2) {
  if (count < 5 || count > f.size()) throw TrackError("differentiation needs at least 5 samples");
  five_point(f, count, periodic, h, d1, d2);
}

TrajectoryDerivatives trajectory_derivatives(const TrackRibbon& track,
                                             const RibbonDerivatives& derivs,
                                             const PathState& path) {
  const std::size_t n = track.size();
  if (path.n.size() != n || path.dn.size() != n || path.ddn.size() != n ||
      derivs.dP.size() != n) {
    throw TrackError("trajectory_derivatives: length mismatch");
  }
  TrajectoryDerivatives td;
  td.d1.resize(n);
  td.d2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    td.d1[i] = derivs.dP[i] + path.n[i] * derivs.dN[i] + path.dn[i] * track.N[i];
    td.d2[i] = derivs.ddP[i] + path.n[i] * derivs.ddN[i] + path.ddn[i] * track.N[i] +
               2.0 * path.dn[i] * derivs.dN[i];
  }
  return td;
}

double curvature(const Vec3& d1, const Vec3& d2) {
  const double q = d1.x() * d1.x() + d1.y() * d1.y();
  if (!(q > 0.0)) throw TrackError("curvature: vanishing horizontal tangent");
  return (d2.y() * d1.x() - d2.x() * d1.y()) / (q * std::sqrt(q));
}

std::vector<double> curvature(const TrajectoryDerivatives& td) {
  std::vector<double> k(td.d1.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = curvature(td.d1[i], td.d2[i]);
  return k;
}

CurvatureGradient curvature_gradient(const Vec3& d1, const Vec3& d2) {
  const double x1 = d1.x(), y1 = d1.y(), x2 = d2.x(), y2 = d2.y();
  const double q = x1 * x1 + y1 * y1;
  if (!(q > 0.0)) throw TrackError("curvature_gradient: vanishing horizontal tangent");
  const double q32 = q * std::sqrt(q);
  const double num = y2 * x1 - x2 * y1;
  const double q52 = q32 * q;
  return {y2 / q32 - 3.0 * x1 * num / q52, -x2 / q32 - 3.0 * y1 * num / q52,
          -y1 / q32, x1 / q32};
}

double slope_angle(const Vec3& d1) {
  const double horiz = std::hypot(d1.x(), d1.y());
  if (!(horiz > 0.0)) throw TrackError("slope: vanishing horizontal tangent");
  return std::atan(d1.z() / horiz);
}

double bank_angle(const Vec3& normal) {
  const double horiz = std::hypot(normal.x(), normal.y());
  if (horiz < 1e-9) return 0.0;
  // Inside (left) edge below the outside edge is positive banking.
  return std::atan(-normal.z() / horiz);
}

SlopeBanking slope_and_banking(const TrackRibbon& track,
                               const RibbonDerivatives& /*derivs*/,
                               const std::vector<Vec3>& d1_prev) {
  if (d1_prev.size() != track.size()) {
    throw TrackError("slope_and_banking: length mismatch");
  }
  SlopeBanking out;
  out.theta.resize(track.size());
  out.phi.resize(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) {
    out.theta[i] = slope_angle(d1_prev[i]);
    out.phi[i] = bank_angle(track.N[i]);
  }
  return out;
}

double path_length(const TrackRibbon& track, const TrajectoryDerivatives& td) {
  double total = 0.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    const double h = track.s_ref[i] - track.s_ref[i - 1];
    total += 0.5 * h * (td.d1[i - 1].norm() + td.d1[i].norm());
  }
  return total;
}

}  // namespace apexcvx
