#include "nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace dar::nn {

using json = nlohmann::json;

Var ParamSet::add(const std::string& name, Mat init) {
  require(!params_.count(name), "duplicate parameter name: " + name);
  auto v = ag::leaf(std::move(init));
  params_[name] = v;
  return v;
}

Var ParamSet::get(const std::string& name) const {
  auto it = params_.find(name);
  require(it != params_.end(), "unknown parameter: " + name);
  return it->second;
}

std::vector<Var> ParamSet::list() const {
  std::vector<Var> out;
  out.reserve(params_.size());
  for (const auto& [_, v] : params_) out.push_back(v);
  return out;
}

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [name, v] : params_) {
    h = fnv1a(name, h);
    h = fnv1a(v->value.data(), sizeof(double) * static_cast<std::size_t>(v->value.size()), h);
  }
  return h;
}

Mat glorot(int rows, int cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

Linear::Linear(ParamSet& ps, const std::string& prefix, int in, int out,
               std::mt19937_64& rng) {
  w = ps.add(prefix + ".w", glorot(out, in, rng));
  b = ps.add(prefix + ".b", Mat::Zero(out, 1));
}

Var Linear::operator()(const Var& x) const { return ag::add(ag::matmul(w, x), b); }

GruCell::GruCell(ParamSet& ps, const std::string& prefix, int input, int h,
                 std::mt19937_64& rng)
    : hidden(h) {
  wz = ps.add(prefix + ".wz", glorot(h, input, rng));
  uz = ps.add(prefix + ".uz", glorot(h, h, rng));
  bz = ps.add(prefix + ".bz", Mat::Zero(h, 1));
  wr = ps.add(prefix + ".wr", glorot(h, input, rng));
  ur = ps.add(prefix + ".ur", glorot(h, h, rng));
  br = ps.add(prefix + ".br", Mat::Zero(h, 1));
  wn = ps.add(prefix + ".wn", glorot(h, input, rng));
  un = ps.add(prefix + ".un", glorot(h, h, rng));
  bn = ps.add(prefix + ".bn", Mat::Zero(h, 1));
}

Var GruCell::step(const Var& x, const Var& h) const {
  using namespace ag;
  Var z = sigmoid(add(add(matmul(wz, x), matmul(uz, h)), bz));
  Var r = sigmoid(add(add(matmul(wr, x), matmul(ur, h)), br));
  Var n = tanh_(add(add(matmul(wn, x), matmul(un, mul(r, h))), bn));
  // h' = (1 - z) .* n + z .* h
  Var one_minus_z = scale(add_const(scale(z, -1.0), 1.0), 1.0);
  return add(mul(one_minus_z, n), mul(z, h));
}

BiGru::BiGru(ParamSet& ps, const std::string& prefix, int input, int hidden,
             std::mt19937_64& rng)
    : fwd(ps, prefix + ".fwd", input, hidden, rng),
      bwd(ps, prefix + ".bwd", input, hidden, rng) {}

std::vector<Var> BiGru::operator()(const std::vector<Var>& xs) const {
  const std::size_t n = xs.size();
  std::vector<Var> hf(n), hb(n);
  Var h = ag::constant(Mat::Zero(fwd.hidden, 1));
  for (std::size_t t = 0; t < n; ++t) {
    h = fwd.step(xs[t], h);
    hf[t] = h;
  }
  h = ag::constant(Mat::Zero(bwd.hidden, 1));
  for (std::size_t t = n; t-- > 0;) {
    h = bwd.step(xs[t], h);
    hb[t] = h;
  }
  std::vector<Var> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = ag::concat_rows(hf[t], hb[t]);
  return out;
}

Adam::Adam(std::vector<Var> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (p->grad.size() == 0) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p->grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    Mat mhat = m_[i] / bc1;
    Mat vhat = v_[i] / bc2;
    p->value.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

void Adam::zero_grad() {
  for (const auto& p : params_)
    if (p->grad.size() != 0) p->grad.setZero();
}

void save_checkpoint(const std::string& path, const ParamSet& ps,
                     const std::string& meta_json) {
  json manifest;
  manifest["meta"] = meta_json.empty() ? json::object() : json::parse(meta_json);
  json arrays = json::array();
  for (const auto& [name, v] : ps.all()) {
    arrays.push_back({{"name", name},
                      {"rows", v->value.rows()},
                      {"cols", v->value.cols()},
                      {"dtype", "f64"}});
  }
  manifest["arrays"] = arrays;
  std::string mstr = manifest.dump();

  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot open checkpoint for writing: " + path);
  f.write("DARCKPT1", 8);
  std::uint64_t mlen = mstr.size();
  f.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  f.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  for (const auto& [name, v] : ps.all()) {
    f.write(reinterpret_cast<const char*>(v->value.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v->value.size())));
  }
  require(f.good(), "checkpoint write failed: " + path);
}

std::string load_checkpoint(const std::string& path, ParamSet& ps) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  require(f.good() && std::memcmp(magic, "DARCKPT1", 8) == 0,
          "not a checkpoint file: " + path);
  std::uint64_t mlen = 0;
  f.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mstr(mlen, '\0');
  f.read(mstr.data(), static_cast<std::streamsize>(mlen));
  require(f.good(), "truncated checkpoint manifest: " + path);
  json manifest = json::parse(mstr);
  for (const auto& a : manifest["arrays"]) {
    std::string name = a["name"];
    Eigen::Index rows = a["rows"], cols = a["cols"];
    Mat m(rows, cols);
    f.read(reinterpret_cast<char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    require(f.good(), "truncated checkpoint array: " + name);
    if (ps.all().count(name)) {
      auto v = ps.get(name);
      require(v->value.rows() == rows && v->value.cols() == cols,
              "checkpoint shape mismatch for " + name);
      v->value = std::move(m);
    } else {
      ps.add(name, std::move(m));
    }
  }
  return manifest["meta"].dump();
}

}  // namespace dar::nn
