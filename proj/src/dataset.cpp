#include "cpd/dataset.hpp"

#include "cpd/errors.hpp"

#include "byte_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace cpd {

std::string to_string(CaseId id) { return "case" + std::to_string(static_cast<int>(id)); }

CaseId parse_case_id(const std::string& text) {
  if (text == "case1" || text == "1") return CaseId::case1;
  if (text == "case2" || text == "2") return CaseId::case2;
  if (text == "case3" || text == "3") return CaseId::case3;
  throw ConfigError("case", "unknown case '" + text + "'");
}

CaseSpec CaseSpec::preset(CaseId id) {
  switch (id) {
    case CaseId::case1: return preset(id, 40);
    case CaseId::case2: return preset(id, 50);
    case CaseId::case3: return preset(id, 51);
  }
  throw ConfigError("case", "unknown case");
}

CaseSpec CaseSpec::preset(CaseId id, int n_samples) {
  if (n_samples < 2) throw ConfigError("n_samples", "need at least 2 samples");
  CaseSpec spec;
  spec.case_id = id;
  spec.n_samples = n_samples;
  spec.fracture_enabled = id != CaseId::case1;
  spec.fixed_param = id == CaseId::case3 ? 1.5 : 1.0;
  const double lo = spec.range_lo(), hi = spec.range_hi();
  for (int k = 0; k < n_samples; ++k)
    spec.param_values.push_back(lo + (hi - lo) * static_cast<double>(k) / (n_samples - 1));
  return spec;
}

double CaseSpec::range_lo() const { return case_id == CaseId::case3 ? 0.5 : 0.0; }
double CaseSpec::range_hi() const { return case_id == CaseId::case3 ? 1.5 : 2.0; }

DomainSpec CaseSpec::domain_for(const DomainSpec& base, std::size_t k) const {
  DomainSpec d = base;
  if (case_id == CaseId::case3) {
    d.hole_radius = param_values.at(k);
    d.notch_height = fixed_param;
  } else {
    d.hole_radius = fixed_param;
    d.notch_height = param_values.at(k);
  }
  return d;
}

void CaseSpec::validate() const {
  if (n_samples <= 0 || param_values.size() != static_cast<std::size_t>(n_samples))
    throw ConfigError("n_samples", "must equal the number of parameter values");
  const double fixed = case_id == CaseId::case3 ? 1.5 : 1.0;
  if (fixed_param != fixed) throw ConfigError("fixed_param", "does not match " + to_string(case_id));
  if (fracture_enabled != (case_id != CaseId::case1))
    throw ConfigError("fracture_enabled", "does not match " + to_string(case_id));
  for (double v : param_values)
    if (!(v >= range_lo() && v <= range_hi()))
      throw ConfigError("param_values", "value " + std::to_string(v) + " outside the case range");
}

bool trapping_classifier(double r, double h) {
  if (!(r > 0) || !(h >= 0)) throw ConfigError("r", "trapping ratio needs r > 0 and h >= 0");
  return (r + h) / r <= 1.4 + 1e-12;
}

bool crack_merges_hole(const Trajectory& traj, int tau) {
  const DomainSpec& d = traj.domain;
  if (!d.has_hole() || !d.has_notch() || traj.frames.empty()) return false;
  const auto& frame = tau < 0 ? traj.frames.back() : traj.frames.at(static_cast<std::size_t>(tau));
  const auto& ref = traj.ref_positions();
  const double pitch = grid_pitch(d);
  const Vec2 tip(d.notch_tip_x, d.notch_y());

  std::vector<std::uint32_t> parent(ref.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<std::uint8_t> on_crack(ref.size(), 0);
  for (std::size_t t = 0; t < traj.triangles.size(); ++t) {
    if (frame.alive[t]) continue;
    const auto& tri = traj.triangles[t];
    for (auto v : tri) on_crack[v] = 1;
    parent[find(tri[1])] = find(tri[0]);
    parent[find(tri[2])] = find(tri[0]);
  }

  std::vector<std::uint8_t> at_tip(ref.size(), 0);
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (on_crack[i] && (ref[i] - tip).norm() <= 1.5 * pitch) at_tip[find(static_cast<std::uint32_t>(i))] = 1;
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (on_crack[i] && (ref[i] - d.hole_center).norm() <= d.hole_radius + 0.75 * pitch &&
        at_tip[find(static_cast<std::uint32_t>(i))])
      return true;
  return false;
}

// --- snapshot files -------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'P', 'D', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 9 * 8 + 8 + 8 + 4;

using detail::ByteReader;
using detail::ByteWriter;

// Appends the CRC of the pending block and flushes it.
void seal(ByteWriter& w, std::ostream& out) {
  w.put_crc();
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
  w.clear();
}

// Reads an n-byte block plus its CRC and verifies it.
std::vector<unsigned char> read_block(std::istream& in, std::size_t n, const std::string& what) {
  std::vector<unsigned char> buf(n + 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw FormatError("truncated " + what);
  ByteReader tail(std::span<const unsigned char>(buf).subspan(n));
  if (tail.get<std::uint32_t>() != crc32_of(std::span<const unsigned char>(buf.data(), n)))
    throw ChecksumError("checksum mismatch in " + what);
  buf.resize(n);
  return buf;
}

}  // namespace

std::uint32_t crc32_of(std::span<const unsigned char> bytes) { return detail::crc32_bytes(bytes); }

std::uint32_t detail::crc32_bytes(std::span<const unsigned char> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_trajectory(const Trajectory& traj, std::ostream& out) {
  traj.check_invariants();
  const std::size_t n = traj.particle_count();
  const std::size_t t_count = traj.triangles.size();
  const auto& d = traj.domain;

  ByteWriter w;
  w.raw(kMagic, 4);
  w.put(kTrajectoryVersion);
  w.put(traj.sample_id);
  w.put(static_cast<std::uint32_t>(traj.case_tag));
  w.put(static_cast<std::uint64_t>(n));
  for (double v : {traj.geometry_param, d.width, d.height, d.hole_center.x(), d.hole_center.y(), d.hole_radius,
                   d.notch_tip_x, d.notch_height, d.target_spacing})
    w.put(v);
  w.put(d.seed);
  w.put(static_cast<std::uint64_t>(t_count));
  w.put(static_cast<std::uint32_t>(traj.frames.size()));
  seal(w, out);

  for (const auto& tri : traj.triangles)
    for (auto v : tri) w.put(v);
  seal(w, out);

  const std::size_t flag_bytes = (t_count + 7) / 8;
  std::vector<unsigned char> bits(flag_bytes);
  for (const auto& f : traj.frames) {
    for (const auto& p : f.positions) {
      w.put(p.x());
      w.put(p.y());
    }
    std::fill(bits.begin(), bits.end(), 0);
    for (std::size_t t = 0; t < t_count; ++t)
      if (f.alive[t]) bits[t / 8] |= static_cast<unsigned char>(1u << (t % 8));
    w.raw(bits.data(), bits.size());
    seal(w, out);
  }
  if (!out) throw FormatError("write failed");
}

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    write_trajectory(traj, out);
    out.flush();
    if (!out) throw FormatError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Trajectory read_trajectory(std::istream& in) {
  const auto header = read_block(in, kHeaderBytes, "header");
  ByteReader r(header);
  if (std::memcmp(r.take(4), kMagic, 4) != 0) throw FormatError("not a trajectory file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kTrajectoryVersion)
    throw FormatError("unsupported trajectory version " + std::to_string(version));

  Trajectory traj;
  traj.sample_id = r.get<std::uint32_t>();
  traj.case_tag = static_cast<std::uint8_t>(r.get<std::uint32_t>());
  const auto n = r.get<std::uint64_t>();
  traj.geometry_param = r.get<double>();
  auto& d = traj.domain;
  d.width = r.get<double>();
  d.height = r.get<double>();
  const double cx = r.get<double>();
  const double cy = r.get<double>();
  d.hole_center = Vec2(cx, cy);
  d.hole_radius = r.get<double>();
  d.notch_tip_x = r.get<double>();
  d.notch_height = r.get<double>();
  d.target_spacing = r.get<double>();
  d.seed = r.get<std::uint64_t>();
  const auto t_count = r.get<std::uint64_t>();
  const auto frames = r.get<std::uint32_t>();
  if (frames != 1 && frames != static_cast<std::uint32_t>(kSnapshotCount)) throw FormatError("unexpected frame count");
  if (n == 0 || n > (1ull << 32) || t_count > (1ull << 33)) throw FormatError("implausible sizes in header");

  const auto tri_bytes = read_block(in, t_count * 12, "triangle block");
  ByteReader tr(tri_bytes);
  traj.triangles.resize(t_count);
  for (auto& tri : traj.triangles)
    for (auto& v : tri) {
      v = tr.get<std::uint32_t>();
      if (v >= n) throw FormatError("triangle index out of range");
    }

  const std::size_t flag_bytes = (t_count + 7) / 8;
  traj.frames.resize(frames);
  for (std::uint32_t k = 0; k < frames; ++k) {
    const auto block = read_block(in, n * 16 + flag_bytes, "frame " + std::to_string(k));
    ByteReader fr(block);
    auto& f = traj.frames[k];
    f.positions.resize(n);
    for (auto& p : f.positions) {
      const double x = fr.get<double>();
      const double y = fr.get<double>();
      p = Vec2(x, y);
    }
    const unsigned char* bits = fr.take(flag_bytes);
    f.alive.resize(t_count);
    for (std::size_t t = 0; t < t_count; ++t) f.alive[t] = (bits[t / 8] >> (t % 8)) & 1u;
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after last frame");
  traj.check_invariants();
  return traj;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_trajectory(in);
}

// --- generation -----------------------------------------------------------------------

bool GenerationResult::all_ok() const {
  return std::all_of(samples.begin(), samples.end(), [](const SampleRecord& s) { return s.ok; });
}

GenerationResult generate_case(const CaseSpec& spec, const GenerationConfig& config,
                               const std::function<void(const SampleRecord&)>& on_sample) {
  spec.validate();
  config.material.validate();
  LoadingProtocol protocol = config.protocol;
  protocol.fracture_enabled = spec.fracture_enabled;
  protocol.validate();
  for (std::size_t k = 0; k < spec.param_values.size(); ++k) spec.domain_for(config.base, k).validate();
  if (!config.output_dir.empty()) std::filesystem::create_directories(config.output_dir);

  const std::size_t n = spec.param_values.size();
  GenerationResult result;
  result.samples.resize(n);
  std::vector<Trajectory> kept(n);
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;

  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      SampleRecord& rec = result.samples[k];
      rec.sample_id = static_cast<std::uint32_t>(k);
      rec.param = spec.param_values[k];
      const auto start = std::chrono::steady_clock::now();
      try {
        RunResult run = run_quasi_static(spec.domain_for(config.base, k), config.material, protocol,
                                         static_cast<long>(k));
        Trajectory& traj = run.trajectory;
        traj.case_tag = static_cast<std::uint8_t>(spec.case_id);
        traj.geometry_param = rec.param;
        rec.first_failure_tau = traj.first_failure_tau();
        rec.merged = crack_merges_hole(traj);
        if (!config.output_dir.empty()) {
          std::ostringstream name;
          name << to_string(spec.case_id) << "_" << std::setw(3) << std::setfill('0') << k << ".cpd";
          rec.file = config.output_dir / name.str();
          write_trajectory(traj, rec.file);
        }
        if (config.keep_trajectories) kept[k] = std::move(traj);
        rec.ok = true;
        rec.status = "ok";
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.status = std::string("failed: ") + e.what();
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (on_sample) {
        std::lock_guard lock(report_mutex);
        on_sample(rec);
      }
    }
  };

  const int workers = std::clamp(config.workers, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (config.keep_trajectories)
    for (std::size_t k = 0; k < n; ++k)
      if (result.samples[k].ok) result.trajectories.push_back(std::move(kept[k]));
  if (!config.output_dir.empty()) write_manifest(config.output_dir / "manifest.tsv", spec, result.samples);
  return result;
}

void write_manifest(const std::filesystem::path& path, const CaseSpec& spec, std::span<const SampleRecord> samples) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string());
  out << "# " << to_string(spec.case_id) << (spec.case_id == CaseId::case3 ? " param=r" : " param=h")
      << " fixed=" << spec.fixed_param << " fracture=" << (spec.fracture_enabled ? "yes" : "no") << "\n";
  out << "sample_id\tparam\tstatus\tfirst_failure_tau\tmerged\tpath\n";
  out << std::setprecision(17);
  for (const auto& s : samples) {
    std::string status = s.status;
    std::replace(status.begin(), status.end(), '\t', ' ');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << s.sample_id << '\t' << s.param << '\t' << status << '\t' << s.first_failure_tau << '\t'
        << (s.merged ? 1 : 0) << '\t' << s.file.filename().string() << '\n';
  }
}

// --- training tensors -----------------------------------------------------------------

void TrainSplit::validate(std::size_t n) const {
  std::vector<int> seen(n, 0);
  for (const auto* ids : {&train_ids, &test_ids})
    for (auto id : *ids) {
      if (id >= n) throw ConfigError("split", "sample id " + std::to_string(id) + " out of range");
      if (seen[id]++) throw ConfigError("split", "sample id " + std::to_string(id) + " listed twice");
    }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ConfigError("split", "split does not cover all samples");
  if (train_ids.empty()) throw ConfigError("split", "empty training split");
}

TrainSplit make_split(std::size_t n_samples, std::size_t n_test) {
  if (n_test + 1 > n_samples) throw ConfigError("n_test", "must leave at least one training sample");
  TrainSplit split;
  std::vector<std::uint8_t> is_test(n_samples, 0);
  for (std::size_t j = 0; j < n_test; ++j) {
    const auto id = static_cast<std::size_t>(std::floor((static_cast<double>(j) + 0.5) * n_samples / n_test));
    is_test[std::clamp<std::size_t>(id, 1, n_samples - 2)] = 1;
  }
  for (std::size_t k = 0; k < n_samples; ++k) (is_test[k] ? split.test_ids : split.train_ids).push_back(k);
  if (split.test_ids.size() != n_test) throw ConfigError("n_test", "too many test samples for this family");
  return split;
}

TrainSplit full_split(CaseId id) {
  switch (id) {
    case CaseId::case1: return make_split(40, 5);
    case CaseId::case2: return make_split(50, 5);
    case CaseId::case3: return make_split(51, 6);
  }
  throw ConfigError("case", "unknown case");
}

namespace {

double to_unit_interval(double v, double lo, double hi) { return 2.0 * (v - lo) / (hi - lo) - 1.0; }

}  // namespace

double Normalization::branch(double param) const { return to_unit_interval(param, branch_min, branch_max); }

Eigen::Vector3d Normalization::trunk(double x, double y, double tau_fraction) const {
  return {to_unit_interval(x, trunk_min(0), trunk_max(0)), to_unit_interval(y, trunk_min(1), trunk_max(1)),
          to_unit_interval(tau_fraction, trunk_min(2), trunk_max(2))};
}

Eigen::Vector2d Normalization::standardize(const Eigen::Vector2d& u) const {
  return (u - target_mean).cwiseQuotient(target_std);
}

Eigen::Vector2d Normalization::destandardize(const Eigen::Vector2d& z) const {
  return z.cwiseProduct(target_std) + target_mean;
}

std::size_t TrainingTensors::train_rows() const {
  std::size_t rows = 0;
  for (const auto& s : train) rows += static_cast<std::size_t>(s.trunk.cols());
  return rows;
}

SampleTensors make_sample_tensors(const Trajectory& traj, const Normalization& norm) {
  const std::size_t n = traj.particle_count();
  const std::size_t frames = traj.frames.size();
  if (frames != static_cast<std::size_t>(kSnapshotCount))
    throw ConfigError("dataset", "sample " + std::to_string(traj.sample_id) + " is not a full loading history");
  SampleTensors s;
  s.sample_id = traj.sample_id;
  s.param = traj.geometry_param;
  s.branch = norm.branch(traj.geometry_param);
  s.particles = n;
  s.trunk.resize(3, static_cast<Eigen::Index>(n * frames));
  s.targets.resize(2, static_cast<Eigen::Index>(n * frames));
  const auto& ref = traj.ref_positions();
  const double last = static_cast<double>(frames - 1);
  for (std::size_t tau = 0; tau < frames; ++tau)
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(tau * n + i);
      s.trunk.col(col) = norm.trunk(ref[i].x(), ref[i].y(), static_cast<double>(tau) / last);
      s.targets.col(col) = norm.standardize(traj.frames[tau].positions[i] - ref[i]);
    }
  return s;
}

TrainingTensors build_training_tensors(std::span<const Trajectory> trajectories, const TrainSplit& split) {
  split.validate(trajectories.size());
  Normalization norm;
  norm.branch_min = std::numeric_limits<double>::infinity();
  norm.branch_max = -norm.branch_min;
  norm.trunk_min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  norm.trunk_max = -norm.trunk_min;
  norm.trunk_min(2) = 0.0;
  norm.trunk_max(2) = 1.0;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sum_sq = Eigen::Vector2d::Zero();
  double count = 0.0;

  for (auto id : split.train_ids) {
    const Trajectory& traj = trajectories[id];
    norm.branch_min = std::min(norm.branch_min, traj.geometry_param);
    norm.branch_max = std::max(norm.branch_max, traj.geometry_param);
    const auto& ref = traj.ref_positions();
    for (const auto& p : ref) {
      norm.trunk_min.head<2>() = norm.trunk_min.head<2>().cwiseMin(p);
      norm.trunk_max.head<2>() = norm.trunk_max.head<2>().cwiseMax(p);
    }
    for (const auto& f : traj.frames)
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const Eigen::Vector2d u = f.positions[i] - ref[i];
        sum += u;
        sum_sq += u.cwiseProduct(u);
      }
    count += static_cast<double>(ref.size() * traj.frames.size());
  }
  if (!(norm.branch_max > norm.branch_min)) throw ConfigError("branch", "training parameters are all equal");
  for (int c = 0; c < 2; ++c)
    if (!(norm.trunk_max(c) > norm.trunk_min(c))) throw ConfigError("trunk", "degenerate coordinate range");
  norm.target_mean = sum / count;
  const Eigen::Vector2d var = (sum_sq / count - norm.target_mean.cwiseProduct(norm.target_mean)).cwiseMax(0.0);
  norm.target_std = var.cwiseSqrt();
  for (int c = 0; c < 2; ++c)
    if (!(norm.target_std(c) > 0)) throw ConfigError("targets", "displacement component has zero spread");

  TrainingTensors out;
  out.norm = norm;
  for (auto id : split.train_ids) out.train.push_back(make_sample_tensors(trajectories[id], norm));
  for (auto id : split.test_ids) out.test.push_back(make_sample_tensors(trajectories[id], norm));
  return out;
}

}  // namespace cpd
