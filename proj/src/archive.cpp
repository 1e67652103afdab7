#include "ddprm/archive.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ddprm/common.hpp"

namespace ddprm {

namespace {

struct ByteWriter {
  std::vector<std::uint8_t> buf;

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf.push_back(v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    i64(static_cast<std::int64_t>(s.size()));
    raw(s.data(), s.size());
  }
  void dvec(const std::vector<double>& v) {
    i64(static_cast<std::int64_t>(v.size()));
    if (!v.empty()) raw(v.data(), v.size() * sizeof(double));
  }
  void ivec(const std::vector<int>& v) {
    i64(static_cast<std::int64_t>(v.size()));
    for (int x : v) i32(x);
  }
};

struct ByteReader {
  const std::uint8_t* p;
  const std::uint8_t* end;

  void raw(void* out, std::size_t n) {
    if (static_cast<std::size_t>(end - p) < n) {
      throw chain_error("archive truncated");
    }
    std::memcpy(out, p, n);
    p += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::int32_t i32() {
    std::int32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::int64_t n = i64();
    if (n < 0) throw chain_error("archive corrupt");
    std::string s(static_cast<std::size_t>(n), '\0');
    raw(s.data(), s.size());
    return s;
  }
  std::vector<double> dvec() {
    const std::int64_t n = i64();
    if (n < 0) throw chain_error("archive corrupt");
    std::vector<double> v(static_cast<std::size_t>(n));
    if (n > 0) raw(v.data(), v.size() * sizeof(double));
    return v;
  }
  std::vector<int> ivec() {
    const std::int64_t n = i64();
    if (n < 0) throw chain_error("archive corrupt");
    std::vector<int> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = i32();
    return v;
  }
};

constexpr char magic[8] = {'D', 'D', 'P', 'R', 'M', 'A', '0', '1'};

}  // namespace

const ThresholdVector& ArchiveState::atom(int h) const {
  const auto it = std::lower_bound(
      components.begin(), components.end(), h,
      [](const ArchiveComponent& c, int hh) { return c.h < hh; });
  if (it == components.end() || it->h != h) {
    throw std::out_of_range("no component at address " + std::to_string(h));
  }
  return it->tau;
}

PosteriorArchive::PosteriorArchive(RatingDataset data,
                                   std::vector<int> mixture_obs,
                                   std::vector<int> pattern_of_obs,
                                   std::vector<CovariateVector> patterns,
                                   std::vector<int> pattern_item, RunInfo info)
    : data_(std::move(data)),
      mixture_obs_(std::move(mixture_obs)),
      pattern_of_obs_(std::move(pattern_of_obs)),
      patterns_(std::move(patterns)),
      pattern_item_(std::move(pattern_item)),
      info_(std::move(info)) {
  slice_index_.assign(data_.obs.size(), -1);
  for (std::size_t k = 0; k < mixture_obs_.size(); ++k) {
    slice_index_[static_cast<std::size_t>(mixture_obs_[k])] =
        static_cast<int>(k);
  }
}

void PosteriorArchive::add_state(ArchiveState s) {
  states_.push_back(std::move(s));
}

const ThresholdVector& PosteriorArchive::thresholds_for(std::size_t s,
                                                        int obs_index) const {
  const ArchiveState& st = states_.at(s);
  const int k = slice_index(obs_index);
  if (k >= 0) return st.atom(st.z[static_cast<std::size_t>(k)]);
  const int item = data_.obs[static_cast<std::size_t>(obs_index)].item;
  return st.fixed_item_tau[static_cast<std::size_t>(item)];
}

std::vector<std::uint8_t> PosteriorArchive::serialize() const {
  ByteWriter w;
  w.raw(magic, sizeof magic);

  w.u8(data_.design == CovariateDesign::explicit_columns ? 1 : 0);
  w.i32(data_.num_examinees);
  w.i32(data_.num_items);
  w.i32(data_.num_covariates);
  w.ivec(data_.max_category);
  w.i64(static_cast<std::int64_t>(data_.obs.size()));
  for (const Observation& o : data_.obs) {
    w.i32(o.examinee);
    w.i32(o.item);
    w.i32(o.rating);
  }
  if (data_.design == CovariateDesign::explicit_columns) {
    for (const CovariateVector& x : data_.covariate_rows) w.dvec(x);
  }

  w.ivec(mixture_obs_);
  w.ivec(pattern_of_obs_);
  w.i64(static_cast<std::int64_t>(patterns_.size()));
  for (const CovariateVector& x : patterns_) w.dvec(x);
  w.ivec(pattern_item_);

  w.u64(info_.seed);
  w.i32(info_.chain_id);
  w.i64(info_.iterations);
  w.i64(info_.burnin);
  w.i64(info_.thin);
  w.i32(info_.weights_mode);
  w.i64(static_cast<std::int64_t>(info_.acceptance.size()));
  for (const auto& [k, v] : info_.acceptance) {
    w.str(k);
    w.f64(v);
  }
  w.i64(static_cast<std::int64_t>(info_.extra.size()));
  for (const auto& [k, v] : info_.extra) {
    w.str(k);
    w.str(v);
  }

  w.i64(static_cast<std::int64_t>(states_.size()));
  for (const ArchiveState& s : states_) {
    w.dvec(s.theta);
    w.f64(s.sigma2);
    w.f64(s.alpha);
    w.dvec(s.gamma);
    w.dvec(s.psi);
    w.i64(static_cast<std::int64_t>(s.components.size()));
    for (const ArchiveComponent& c : s.components) {
      w.i32(c.h);
      w.f64(c.upsilon);
      w.dvec(c.tau);
    }
    w.i64(static_cast<std::int64_t>(s.fixed_item_tau.size()));
    for (const ThresholdVector& t : s.fixed_item_tau) w.dvec(t);
    w.i64(static_cast<std::int64_t>(s.z.size()));
    for (std::int32_t z : s.z) w.i32(z);
    w.i64(static_cast<std::int64_t>(s.ypred.size()));
    for (std::int16_t y : s.ypred) w.i32(y);
    w.f64(s.loglik);
  }
  return std::move(w.buf);
}

PosteriorArchive PosteriorArchive::deserialize(
    const std::vector<std::uint8_t>& bytes) {
  ByteReader r{bytes.data(), bytes.data() + bytes.size()};
  char got[8];
  r.raw(got, sizeof got);
  if (std::memcmp(got, magic, sizeof magic) != 0) {
    throw chain_error("not an archive file");
  }

  RatingDataset d;
  d.design = r.u8() ? CovariateDesign::explicit_columns
                    : CovariateDesign::item_dummy;
  d.num_examinees = r.i32();
  d.num_items = r.i32();
  d.num_covariates = r.i32();
  d.max_category = r.ivec();
  const std::int64_t nobs = r.i64();
  d.obs.resize(static_cast<std::size_t>(nobs));
  for (auto& o : d.obs) {
    o.examinee = r.i32();
    o.item = r.i32();
    o.rating = r.i32();
  }
  if (d.design == CovariateDesign::explicit_columns) {
    d.covariate_rows.resize(d.obs.size());
    for (auto& x : d.covariate_rows) x = r.dvec();
  }

  std::vector<int> mixture_obs = r.ivec();
  std::vector<int> pattern_of_obs = r.ivec();
  const std::int64_t npat = r.i64();
  std::vector<CovariateVector> patterns(static_cast<std::size_t>(npat));
  for (auto& x : patterns) x = r.dvec();
  std::vector<int> pattern_item = r.ivec();

  RunInfo info;
  info.seed = r.u64();
  info.chain_id = r.i32();
  info.iterations = r.i64();
  info.burnin = r.i64();
  info.thin = r.i64();
  info.weights_mode = r.i32();
  const std::int64_t nacc = r.i64();
  for (std::int64_t i = 0; i < nacc; ++i) {
    std::string k = r.str();
    info.acceptance[k] = r.f64();
  }
  const std::int64_t nex = r.i64();
  for (std::int64_t i = 0; i < nex; ++i) {
    std::string k = r.str();
    info.extra[k] = r.str();
  }

  PosteriorArchive a(std::move(d), std::move(mixture_obs),
                     std::move(pattern_of_obs), std::move(patterns),
                     std::move(pattern_item), std::move(info));
  const std::int64_t ns = r.i64();
  for (std::int64_t i = 0; i < ns; ++i) {
    ArchiveState s;
    s.theta = r.dvec();
    s.sigma2 = r.f64();
    s.alpha = r.f64();
    s.gamma = r.dvec();
    s.psi = r.dvec();
    const std::int64_t nc = r.i64();
    s.components.resize(static_cast<std::size_t>(nc));
    for (auto& c : s.components) {
      c.h = r.i32();
      c.upsilon = r.f64();
      c.tau = r.dvec();
    }
    const std::int64_t nf = r.i64();
    s.fixed_item_tau.resize(static_cast<std::size_t>(nf));
    for (auto& t : s.fixed_item_tau) t = r.dvec();
    const std::int64_t nz = r.i64();
    s.z.resize(static_cast<std::size_t>(nz));
    for (auto& z : s.z) z = r.i32();
    const std::int64_t ny = r.i64();
    s.ypred.resize(static_cast<std::size_t>(ny));
    for (auto& y : s.ypred) y = static_cast<std::int16_t>(r.i32());
    s.loglik = r.f64();
    a.add_state(std::move(s));
  }
  return a;
}

void PosteriorArchive::save(const std::string& path) const {
  const std::vector<std::uint8_t> bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write archive: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw config_error("archive write failed: " + path);
}

PosteriorArchive PosteriorArchive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open archive: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace ddprm
