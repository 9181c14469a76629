#pragma once

#include <map>
#include <string>
#include <vector>

#include "autograd.hpp"

namespace dar::nn {

using ag::Mat;
using ag::Var;

// Named trainable tensors. Names are stable across runs so checkpoints and
// checksums are reproducible.
class ParamSet {
 public:
  Var add(const std::string& name, Mat init);
  Var get(const std::string& name) const;
  const std::map<std::string, Var>& all() const { return params_; }
  std::vector<Var> list() const;

  std::uint64_t checksum() const;  // FNV-1a over raw double bytes, name order

 private:
  std::map<std::string, Var> params_;
};

// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
Mat glorot(int rows, int cols, std::mt19937_64& rng);

struct Linear {
  Var w, b;
  Linear() = default;
  Linear(ParamSet& ps, const std::string& prefix, int in, int out,
         std::mt19937_64& rng);
  Var operator()(const Var& x) const;  // x: in x 1 -> out x 1
};

struct GruCell {
  Var wz, uz, bz, wr, ur, br, wn, un, bn;
  GruCell() = default;
  GruCell(ParamSet& ps, const std::string& prefix, int input, int hidden,
          std::mt19937_64& rng);
  Var step(const Var& x, const Var& h) const;
  int hidden = 0;
};

// Bidirectional GRU; output at each position is [forward_h; backward_h].
struct BiGru {
  GruCell fwd, bwd;
  BiGru() = default;
  BiGru(ParamSet& ps, const std::string& prefix, int input, int hidden,
        std::mt19937_64& rng);
  std::vector<Var> operator()(const std::vector<Var>& xs) const;
  int out_dim() const { return 2 * fwd.hidden; }
};

class Adam {
 public:
  Adam(std::vector<Var> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();
  const std::vector<Var>& params() const { return params_; }

 private:
  std::vector<Var> params_;
  std::vector<Mat> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Checkpoint archive: "DARCKPT1", u64 manifest length, JSON manifest, then
// raw little-endian doubles per array in manifest order. Doubles are stored
// bit-exact, so save/load round-trips exactly.
void save_checkpoint(const std::string& path, const ParamSet& ps,
                     const std::string& meta_json);
std::string load_checkpoint(const std::string& path, ParamSet& ps);

}  // namespace dar::nn
