#include "sosvn/container.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sosvn {

static_assert(std::endian::native == std::endian::little, "array files are written in host byte order");

namespace fs = std::filesystem;

void Manifest::set(const std::string& key, const std::string& value) {
  if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
      value.find('\n') != std::string::npos)
    throw std::invalid_argument("manifest entries must be single-line and keys must not contain '='");
  for (auto& e : entries_)
    if (e.first == key) {
      e.second = value;
      return;
    }
  entries_.emplace_back(key, value);
}

void Manifest::set(const std::string& key, double value) { set(key, format_double(value)); }
void Manifest::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
void Manifest::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

bool Manifest::has(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.first == key) return true;
  return false;
}

const std::string& Manifest::get(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.first == key) return e.second;
  throw std::runtime_error("manifest has no key '" + key + "'");
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::runtime_error("manifest value of '" + key + "' is not a number: " + s);
  return v;
}

}  // namespace

double Manifest::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }
std::int64_t Manifest::get_int(const std::string& key) const { return parse_number<std::int64_t>(key, get(key)); }
std::uint64_t Manifest::get_uint(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }

std::string Manifest::text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed manifest line: " + line);
    m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

void Manifest::write(const fs::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text();
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

Manifest Manifest::read(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

namespace {

template <class T>
void write_array(const fs::path& dir, Manifest& m, const std::string& name, const char* dtype,
                 const std::vector<T>& v) {
  const fs::path file = dir / (name + ".bin");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  if (!out) throw std::runtime_error("write failed: " + file.string());
  m.set("array." + name, std::string(dtype) + " " + std::to_string(v.size()));
}

template <class T>
std::vector<T> read_array(const fs::path& dir, const Manifest& m, const std::string& name, const char* dtype) {
  std::istringstream spec(m.get("array." + name));
  std::string type;
  std::size_t count = 0;
  spec >> type >> count;
  if (type != dtype) throw std::runtime_error("array " + name + " has dtype " + type + ", expected " + dtype);
  const fs::path file = dir / (name + ".bin");
  if (!fs::exists(file)) throw MissingFileError("missing array file " + file.string());
  const auto bytes = fs::file_size(file);
  if (bytes != count * sizeof(T))
    throw std::runtime_error("array " + name + " holds " + std::to_string(bytes) + " bytes, manifest predicts " +
                             std::to_string(count * sizeof(T)));
  std::vector<T> v(count);
  std::ifstream in(file, std::ios::binary);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("read failed: " + file.string());
  return v;
}

}  // namespace

void ArrayDir::write_f64(Manifest& m, const std::string& n, const std::vector<double>& v) const { write_array(dir_, m, n, "f64", v); }
void ArrayDir::write_f32(Manifest& m, const std::string& n, const std::vector<float>& v) const { write_array(dir_, m, n, "f32", v); }
void ArrayDir::write_u8(Manifest& m, const std::string& n, const std::vector<std::uint8_t>& v) const { write_array(dir_, m, n, "u8", v); }
void ArrayDir::write_u64(Manifest& m, const std::string& n, const std::vector<std::uint64_t>& v) const { write_array(dir_, m, n, "u64", v); }
std::vector<double> ArrayDir::read_f64(const Manifest& m, const std::string& n) const { return read_array<double>(dir_, m, n, "f64"); }
std::vector<float> ArrayDir::read_f32(const Manifest& m, const std::string& n) const { return read_array<float>(dir_, m, n, "f32"); }
std::vector<std::uint8_t> ArrayDir::read_u8(const Manifest& m, const std::string& n) const { return read_array<std::uint8_t>(dir_, m, n, "u8"); }
std::vector<std::uint64_t> ArrayDir::read_u64(const Manifest& m, const std::string& n) const { return read_array<std::uint64_t>(dir_, m, n, "u64"); }

Manifest open_manifest(const fs::path& dir, const std::string& kind) {
  if (!fs::is_directory(dir)) throw MissingFileError("no such directory: " + dir.string());
  const Manifest m = Manifest::read(dir / "manifest.txt");
  if (!m.has("format_version")) throw VersionMismatchError("manifest has no format_version");
  if (m.get("format_version") != std::to_string(kFormatVersion))
    throw VersionMismatchError("format_version " + m.get("format_version") + " in " + dir.string() +
                               ", this build reads " + std::to_string(kFormatVersion));
  if (m.get("kind") != kind) throw std::runtime_error(dir.string() + " holds a " + m.get("kind") + ", expected " + kind);
  return m;
}

static Manifest new_manifest(const std::string& kind) {
  Manifest m;
  m.set("format_version", kFormatVersion);
  m.set("kind", kind);
  return m;
}

static void prepare_dir(const fs::path& dir) {
  fs::create_directories(dir);
  if (!fs::is_directory(dir)) throw std::runtime_error("cannot create " + dir.string());
}

void put_grid(Manifest& m, const Grid& g) {
  m.set("n_z", g.n_z);
  m.set("n_x", g.n_x);
  m.set("dz", g.dz);
  m.set("dx", g.dx);
  m.set("origin_z", g.origin.z);
  m.set("origin_x", g.origin.x);
}

Grid get_grid(const Manifest& m) {
  Grid g;
  g.n_z = static_cast<int>(m.get_int("n_z"));
  g.n_x = static_cast<int>(m.get_int("n_x"));
  g.dz = m.get_double("dz");
  g.dx = m.get_double("dx");
  g.origin = {m.get_double("origin_z"), m.get_double("origin_x")};
  g.validate();
  return g;
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> v;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) v.push_back(std::stoi(tok));
  return v;
}

}  // namespace

void put_setup(Manifest& m, const Probe& probe, const TxPairScheme& scheme) {
  m.set("probe_elements", probe.n_elements);
  m.set("probe_pitch", probe.pitch);
  m.set("probe_f_c", probe.f_c);
  m.set("probe_center_x", probe.center_x);
  m.set("tx_elements", join_ints(scheme.tx_elements));
  std::vector<int> flat;
  for (const auto& [a, b] : scheme.pairs) {
    flat.push_back(a);
    flat.push_back(b);
  }
  m.set("pairs", join_ints(flat));
  m.set("n_pairs", static_cast<std::int64_t>(scheme.n_pairs()));
}

void get_setup(const Manifest& m, Probe& probe, TxPairScheme& scheme) {
  probe.n_elements = static_cast<int>(m.get_int("probe_elements"));
  probe.pitch = m.get_double("probe_pitch");
  probe.f_c = m.get_double("probe_f_c");
  probe.center_x = m.get_double("probe_center_x");
  scheme.tx_elements = split_ints(m.get("tx_elements"));
  const auto flat = split_ints(m.get("pairs"));
  if (flat.size() % 2) throw std::runtime_error("odd pair list in manifest");
  scheme.pairs.clear();
  for (std::size_t i = 0; i < flat.size(); i += 2) scheme.pairs.emplace_back(flat[i], flat[i + 1]);
  probe.validate();
  scheme.validate(probe);
}

namespace {

void put_truths(const ArrayDir& arrays, Manifest& m, const std::vector<SoSMap>& maps) {
  std::vector<double> sos, contrast, bg_mean, bg_amp;
  std::vector<std::uint8_t> inclusion, smooth;
  std::vector<std::uint64_t> seeds;
  std::string kinds;
  for (const auto& map : maps) {
    sos.insert(sos.end(), map.values.begin(), map.values.end());
    inclusion.insert(inclusion.end(), map.inclusion.begin(), map.inclusion.end());
    contrast.push_back(map.meta.contrast);
    bg_mean.push_back(map.meta.background_mean);
    bg_amp.push_back(map.meta.background_amplitude);
    smooth.push_back(map.meta.smooth ? 1 : 0);
    seeds.push_back(map.meta.seed);
    kinds += (kinds.empty() ? "" : ",") + map.meta.kind;
  }
  arrays.write_f64(m, "sos", sos);
  arrays.write_u8(m, "inclusion", inclusion);
  arrays.write_f64(m, "contrast", contrast);
  arrays.write_f64(m, "background_mean", bg_mean);
  arrays.write_f64(m, "background_amplitude", bg_amp);
  arrays.write_u8(m, "smooth", smooth);
  arrays.write_u64(m, "map_seed", seeds);
  m.set("map_kinds", kinds);
}

std::vector<SoSMap> get_truths(const ArrayDir& arrays, const Manifest& m, const Grid& grid, std::size_t n) {
  const auto sos = arrays.read_f64(m, "sos");
  const auto inclusion = arrays.read_u8(m, "inclusion");
  const auto contrast = arrays.read_f64(m, "contrast");
  const auto bg_mean = arrays.read_f64(m, "background_mean");
  const auto bg_amp = arrays.read_f64(m, "background_amplitude");
  const auto smooth = arrays.read_u8(m, "smooth");
  const auto seeds = arrays.read_u64(m, "map_seed");
  const std::size_t px = grid.cells();
  if (sos.size() != n * px || inclusion.size() != n * px || contrast.size() != n)
    throw std::runtime_error("map arrays do not match the sample count");
  std::vector<std::string> kinds;
  {
    std::istringstream in(m.get("map_kinds"));
    std::string tok;
    while (std::getline(in, tok, ',')) kinds.push_back(tok);
  }
  std::vector<SoSMap> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    auto& map = out[s];
    map.grid = grid;
    map.values.assign(sos.begin() + s * px, sos.begin() + (s + 1) * px);
    map.inclusion.assign(inclusion.begin() + s * px, inclusion.begin() + (s + 1) * px);
    map.meta.kind = s < kinds.size() ? kinds[s] : "";
    map.meta.contrast = contrast[s];
    map.meta.background_mean = bg_mean[s];
    map.meta.background_amplitude = bg_amp[s];
    map.meta.smooth = smooth[s] != 0;
    map.meta.seed = seeds[s];
  }
  return out;
}

}  // namespace

void write_dataset(const fs::path& dir, const Dataset& ds) {
  prepare_dir(dir);
  const std::size_t n = ds.measurements.size();
  if (!ds.truths.empty() && ds.truths.size() != n) throw std::invalid_argument("truth count differs from sample count");
  const std::size_t rows = ds.scheme.n_pairs() * ds.grid.cells();
  Manifest m = new_manifest("dataset");
  m.set("source_tag", to_string(ds.source));
  m.set("n_samples", static_cast<std::uint64_t>(n));
  m.set("seed", ds.seed);
  put_grid(m, ds.grid);
  put_setup(m, ds.probe, ds.scheme);
  m.set("has_truth", ds.truths.empty() ? 0 : 1);
  for (const auto& [k, v] : ds.extra) m.set("meta." + k, v);

  std::vector<double> d, u, eta, ref;
  std::vector<std::uint8_t> mask;
  d.reserve(n * rows);
  mask.reserve(n * rows);
  for (const auto& ms : ds.measurements) {
    if (ms.size() != rows) throw std::invalid_argument("measurement size does not match the dataset layout");
    ms.validate();
    if (ms.source != ds.source) throw std::invalid_argument("measurement source differs from the dataset source");
    d.insert(d.end(), ms.d.begin(), ms.d.end());
    mask.insert(mask.end(), ms.mask.begin(), ms.mask.end());
    u.push_back(ms.u);
    eta.push_back(ms.eta);
    ref.push_back(ms.reference_slowness);
  }
  const ArrayDir arrays(dir);
  arrays.write_f64(m, "d", d);
  arrays.write_u8(m, "mask", mask);
  arrays.write_f64(m, "u", u);
  arrays.write_f64(m, "eta", eta);
  arrays.write_f64(m, "reference_slowness", ref);
  if (!ds.truths.empty()) put_truths(arrays, m, ds.truths);
  m.write(dir / "manifest.txt");
}

Dataset read_dataset(const fs::path& dir) {
  const Manifest m = open_manifest(dir, "dataset");
  Dataset ds;
  ds.source = parse_source_tag(m.get("source_tag"));
  ds.seed = m.get_uint("seed");
  ds.grid = get_grid(m);
  get_setup(m, ds.probe, ds.scheme);
  const std::size_t n = m.get_uint("n_samples");
  const std::size_t rows = ds.scheme.n_pairs() * ds.grid.cells();
  for (const auto& [k, v] : m.entries())
    if (k.rfind("meta.", 0) == 0) ds.extra.emplace_back(k.substr(5), v);

  const ArrayDir arrays(dir);
  const auto d = arrays.read_f64(m, "d");
  const auto mask = arrays.read_u8(m, "mask");
  const auto u = arrays.read_f64(m, "u");
  const auto eta = arrays.read_f64(m, "eta");
  const auto ref = arrays.read_f64(m, "reference_slowness");
  if (d.size() != n * rows || mask.size() != n * rows || u.size() != n)
    throw std::runtime_error("measurement arrays do not match the manifest dimensions");
  for (std::size_t s = 0; s < n; ++s) {
    MeasurementSet ms;
    ms.d.assign(d.begin() + s * rows, d.begin() + (s + 1) * rows);
    ms.mask.assign(mask.begin() + s * rows, mask.begin() + (s + 1) * rows);
    ms.u = u[s];
    ms.eta = eta[s];
    ms.reference_slowness = ref[s];
    ms.source = ds.source;
    ds.measurements.push_back(std::move(ms));
  }
  if (m.get_int("has_truth")) ds.truths = get_truths(arrays, m, ds.grid, n);
  return ds;
}

void write_maps(const fs::path& dir, const MapSet& set) {
  prepare_dir(dir);
  Manifest m = new_manifest("maps");
  m.set("n_samples", static_cast<std::uint64_t>(set.maps.size()));
  put_grid(m, set.grid);
  for (const auto& [k, v] : set.extra) m.set("meta." + k, v);
  const ArrayDir arrays(dir);
  for (const auto& map : set.maps)
    if (!(map.grid == set.grid)) throw std::invalid_argument("map grid differs from the set grid");
  put_truths(arrays, m, set.maps);
  const bool recon = !set.k_star.empty();
  m.set("reconstruction", recon ? 1 : 0);
  if (recon) {
    arrays.write_f64(m, "k_star", set.k_star);
    arrays.write_f64(m, "s_star", set.s_star);
    arrays.write_u8(m, "diverged", set.diverged);
    arrays.write_f64(m, "seconds", set.seconds);
  }
  m.write(dir / "manifest.txt");
}

MapSet read_maps(const fs::path& dir) {
  const Manifest m = open_manifest(dir, "maps");
  MapSet set;
  set.grid = get_grid(m);
  const ArrayDir arrays(dir);
  set.maps = get_truths(arrays, m, set.grid, m.get_uint("n_samples"));
  for (const auto& [k, v] : m.entries())
    if (k.rfind("meta.", 0) == 0) set.extra.emplace_back(k.substr(5), v);
  if (m.get_int("reconstruction")) {
    set.k_star = arrays.read_f64(m, "k_star");
    set.s_star = arrays.read_f64(m, "s_star");
    set.diverged = arrays.read_u8(m, "diverged");
    set.seconds = arrays.read_f64(m, "seconds");
  }
  return set;
}

void write_ray_matrix(const fs::path& dir, const RayMatrix& L) {
  prepare_dir(dir);
  Manifest m = new_manifest("ray_matrix");
  put_grid(m, L.grid());
  put_setup(m, L.probe(), L.scheme());
  m.set("rows", static_cast<std::uint64_t>(L.rows()));
  m.set("cols", static_cast<std::uint64_t>(L.cols()));
  const auto trip = L.triplets();
  m.set("nonzeros", static_cast<std::uint64_t>(trip.size()));
  m.set("triplet_layout", "u32 row, u32 col, f64 length (m), little-endian, 16 bytes each");
  const fs::path file = dir / "triplets.bin";
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const auto& t : trip) {
    char rec[16];
    std::memcpy(rec, &t.row, 4);
    std::memcpy(rec + 4, &t.col, 4);
    std::memcpy(rec + 8, &t.value, 8);
    out.write(rec, 16);
  }
  if (!out) throw std::runtime_error("write failed: " + file.string());
  m.write(dir / "manifest.txt");
}

std::vector<Triplet> read_ray_matrix_triplets(const fs::path& dir) {
  const Manifest m = open_manifest(dir, "ray_matrix");
  const std::size_t n = m.get_uint("nonzeros");
  const fs::path file = dir / "triplets.bin";
  if (!fs::exists(file)) throw MissingFileError("missing " + file.string());
  if (fs::file_size(file) != n * 16) throw std::runtime_error("triplet file size does not match the manifest");
  std::ifstream in(file, std::ios::binary);
  std::vector<Triplet> out(n);
  for (auto& t : out) {
    char rec[16];
    in.read(rec, 16);
    std::memcpy(&t.row, rec, 4);
    std::memcpy(&t.col, rec + 4, 4);
    std::memcpy(&t.value, rec + 8, 8);
  }
  if (!in) throw std::runtime_error("read failed: " + file.string());
  return out;
}

namespace {

// Fixed blob order: layers ascending, arrays in VNLayerParams::for_each_array order.
std::vector<double> flatten(const VNParams& p) {
  std::vector<double> out;
  for (const auto& layer : p.layers)
    layer.for_each_array([&](const char*, const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

void unflatten(VNParams& p, const std::vector<double>& flat) {
  std::size_t pos = 0;
  for (auto& layer : p.layers)
    layer.for_each_array([&](const char*, std::vector<double>& v) {
      if (pos + v.size() > flat.size()) throw std::runtime_error("parameter blob is too short");
      std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
      pos += v.size();
    });
  if (pos != flat.size()) throw std::runtime_error("parameter blob is too long");
}

}  // namespace

void write_checkpoint(const fs::path& dir, const Checkpoint& ck) {
  prepare_dir(dir);
  const VNParams& p = ck.params;
  Manifest m = new_manifest("checkpoint");
  put_grid(m, ck.grid);
  put_setup(m, ck.probe, ck.scheme);
  m.set("layers", p.config.layers);
  m.set("filters", p.config.filters);
  m.set("kernel_size", p.config.kernel_size);
  m.set("knots", p.config.knots);
  m.set("chi_knots", p.config.chi_knots);
  m.set("psi_slope", p.config.psi_slope);
  m.set("phi_slope", p.config.phi_slope);
  m.set("chi_data", p.config.chi_data);
  m.set("chi_reg", p.config.chi_reg);
  m.set("gamma_raw", p.config.gamma_raw);
  m.set("data_step", p.config.data_step);
  m.set("seed", p.seed);
  m.set("step", ck.step);
  m.set("param_order", "per layer: log_precond psi kernels kernel_mean weight_root phi chi_data chi_reg gamma_raw");
  m.set("parameter_count", static_cast<std::uint64_t>(p.parameter_count()));

  const ArrayDir arrays(dir);
  arrays.write_f64(m, "params", flatten(p));
  std::vector<double> ranges;
  for (const auto& layer : p.layers) {
    ranges.push_back(layer.psi_range);
    ranges.insert(ranges.end(), layer.phi_range.begin(), layer.phi_range.end());
  }
  arrays.write_f64(m, "ranges", ranges);
  m.set("has_optimizer", ck.has_optimizer ? 1 : 0);
  if (ck.has_optimizer) {
    arrays.write_f64(m, "adam_m", flatten(ck.adam_m));
    arrays.write_f64(m, "adam_v", flatten(ck.adam_v));
    m.set("adam_t", ck.adam_t);
    std::vector<double> avg;
    for (const auto& a : ck.range_averages) avg.insert(avg.end(), a.begin(), a.end());
    arrays.write_f64(m, "range_averages", avg);
    m.set("range_batches", ck.range_batches);
  }
  m.write(dir / "manifest.txt");
}

Checkpoint read_checkpoint(const fs::path& dir) {
  const Manifest m = open_manifest(dir, "checkpoint");
  Checkpoint ck;
  ck.grid = get_grid(m);
  get_setup(m, ck.probe, ck.scheme);
  VNConfig c;
  c.layers = static_cast<int>(m.get_int("layers"));
  c.filters = static_cast<int>(m.get_int("filters"));
  c.kernel_size = static_cast<int>(m.get_int("kernel_size"));
  c.knots = static_cast<int>(m.get_int("knots"));
  c.chi_knots = static_cast<int>(m.get_int("chi_knots"));
  c.psi_slope = m.get_double("psi_slope");
  c.phi_slope = m.get_double("phi_slope");
  c.chi_data = m.get_double("chi_data");
  c.chi_reg = m.get_double("chi_reg");
  c.gamma_raw = m.get_double("gamma_raw");
  c.data_step = m.get_double("data_step");
  c.validate();

  VNParams& p = ck.params;
  p.config = c;
  p.seed = m.get_uint("seed");
  p.shape = {ck.grid.n_z, ck.grid.n_x, static_cast<int>(ck.scheme.n_pairs())};
  ck.step = m.get_uint("step");
  const std::size_t k = c.kernel_size;
  const std::size_t n_valid = (p.shape.n_z - k + 1) * (p.shape.n_x - k + 1);
  for (int i = 0; i < c.layers; ++i) {
    VNLayerParams layer;
    layer.log_precond.resize(p.shape.rows());
    layer.psi.resize(c.knots);
    layer.kernels.resize(c.filters * k * k);
    layer.kernel_mean.resize(c.filters);
    layer.weight_root.resize(c.filters * n_valid);
    layer.phi.resize(static_cast<std::size_t>(c.filters) * c.knots);
    layer.phi_range.resize(c.filters);
    layer.chi_data.resize(c.chi_knots);
    layer.chi_reg.resize(c.chi_knots);
    layer.gamma_raw.resize(1);
    p.layers.push_back(std::move(layer));
  }
  const ArrayDir arrays(dir);
  unflatten(p, arrays.read_f64(m, "params"));
  const auto ranges = arrays.read_f64(m, "ranges");
  if (ranges.size() != static_cast<std::size_t>(c.layers) * (1 + c.filters))
    throw std::runtime_error("range blob does not match the network shape");
  std::size_t pos = 0;
  for (auto& layer : p.layers) {
    layer.psi_range = ranges[pos++];
    for (auto& r : layer.phi_range) r = ranges[pos++];
  }
  ck.has_optimizer = m.get_int("has_optimizer") != 0;
  if (ck.has_optimizer) {
    ck.adam_m = p.zeros_like();
    ck.adam_v = p.zeros_like();
    unflatten(ck.adam_m, arrays.read_f64(m, "adam_m"));
    unflatten(ck.adam_v, arrays.read_f64(m, "adam_v"));
    ck.adam_t = m.get_uint("adam_t");
    const auto avg = arrays.read_f64(m, "range_averages");
    if (avg.size() != ranges.size()) throw std::runtime_error("range averages do not match the network shape");
    pos = 0;
    for (int i = 0; i < c.layers; ++i) {
      ck.range_averages.emplace_back(avg.begin() + pos, avg.begin() + pos + 1 + c.filters);
      pos += 1 + c.filters;
    }
    ck.range_batches = m.get_uint("range_batches");
  }
  return ck;
}

}  // namespace sosvn
