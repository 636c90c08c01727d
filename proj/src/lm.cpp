// Copyright 2026 nacanon authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nacanon/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nacanon/common.hpp"
#include "nacanon/model_io.hpp"

namespace nacanon::lm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLnEps = 1e-5;

// C[T x n] (+)= A[T x m] * B[m x n]
void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  const std::size_t t_len = a.rows(), m = a.cols(), n = b.cols();
  if (!accumulate) std::fill(c.data().begin(), c.data().end(), 0.0);
  for (std::size_t i = 0; i < t_len; ++i) {
    const double* ai = a[i];
    double* ci = c[i];
    for (std::size_t k = 0; k < m; ++k) {
      const double av = ai[k];
      const double* bk = b[k];
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
  }
}

// C[m x n] += A^T[m x T] * B[T x n]  (A is T x m)
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t t_len = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* at = a[t];
    const double* bt = b[t];
    for (std::size_t i = 0; i < m; ++i) {
      const double av = at[i];
      double* ci = c[i];
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
}

// C[T x m] (+)= A[T x n] * B^T[n x m]  (B is m x n)
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& c,
                 bool accumulate) {
  const std::size_t t_len = a.rows(), n = a.cols(), m = b.rows();
  if (!accumulate) std::fill(c.data().begin(), c.data().end(), 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* at = a[t];
    double* ct = c[t];
    for (std::size_t i = 0; i < m; ++i) {
      const double* bi = b[i];
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += at[j] * bi[j];
      ct[i] += dot;
    }
  }
}

double gelu(double x) {
  const double k = std::sqrt(2.0 / M_PI);
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
  const double k = std::sqrt(2.0 / M_PI);
  const double u = k * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * k * (1.0 + 3.0 * 0.044715 * x * x);
}

struct LnCache {
  Matrix xhat;               // (x - mean) * rstd
  std::vector<double> rstd;  // per row
};

void layer_norm(const Matrix& x, const Matrix& g, const Matrix& b, Matrix& out,
                LnCache* cache) {
  const std::size_t t_len = x.rows(), d = x.cols();
  if (cache) {
    cache->xhat = Matrix(t_len, d);
    cache->rstd.resize(t_len);
  }
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* xt = x[t];
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xt[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = xt[j] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    double* ot = out[t];
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (xt[j] - mean) * rstd;
      ot[j] = g[0][j] * xh + b[0][j];
      if (cache) cache->xhat[t][j] = xh;
    }
    if (cache) cache->rstd[t] = rstd;
  }
}

// dx += backward of layer_norm; dg/db accumulate.
void layer_norm_backward(const Matrix& dy, const LnCache& cache,
                         const Matrix& g, Matrix& dx, Matrix& dg, Matrix& db) {
  const std::size_t t_len = dy.rows(), d = dy.cols();
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* dyt = dy[t];
    const double* xh = cache.xhat[t];
    double sum_dxhat = 0.0, sum_dxhat_xh = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dg[0][j] += dyt[j] * xh[j];
      db[0][j] += dyt[j];
      const double dxh = dyt[j] * g[0][j];
      sum_dxhat += dxh;
      sum_dxhat_xh += dxh * xh[j];
    }
    const double inv_d = 1.0 / static_cast<double>(d);
    double* dxt = dx[t];
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dyt[j] * g[0][j];
      dxt[j] += cache.rstd[t] *
                (dxh - inv_d * sum_dxhat - xh[j] * inv_d * sum_dxhat_xh);
    }
  }
}

void add_bias(Matrix& x, const Matrix& b) {
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t j = 0; j < x.cols(); ++j) x[t][j] += b[0][j];
}

void bias_grad(const Matrix& dy, Matrix& db) {
  for (std::size_t t = 0; t < dy.rows(); ++t)
    for (std::size_t j = 0; j < dy.cols(); ++j) db[0][j] += dy[t][j];
}

}  // namespace

// ---------------------------------------------------------------------
// flatten / unflatten
// ---------------------------------------------------------------------

TokenSequence flatten_coarse(const semantic::SemanticTokens& s,
                             const codec::TokenGrid& prompt,
                             const codec::TokenGrid& target, int q_coarse,
                             int n_s, int n_q) {
  if (prompt.rows() < static_cast<std::size_t>(q_coarse) ||
      target.rows() < static_cast<std::size_t>(q_coarse))
    throw DataError("flatten_coarse: grids have fewer rows than q_coarse");
  TokenSequence seq;
  seq.ids.reserve(s.size() + q_coarse * (prompt.cols() + target.cols()));
  for (int id : s) {
    if (id < 0 || id >= n_s) throw DataError("flatten_coarse: bad semantic id");
    seq.ids.push_back(id);
    seq.segments.push_back(Segment::kSemantic);
  }
  auto push_grid = [&](const codec::TokenGrid& g, Segment seg) {
    for (std::size_t t = 0; t < g.cols(); ++t) {
      for (int q = 0; q < q_coarse; ++q) {
        const int id = g.at(q, t);
        if (id < 0 || id >= n_q)
          throw DataError("flatten_coarse: acoustic token out of range");
        seq.ids.push_back(n_s + q * n_q + id);
        seq.segments.push_back(seg);
      }
    }
  };
  push_grid(prompt, Segment::kPromptCoarse);
  push_grid(target, Segment::kTargetCoarse);
  return seq;
}

Unflattened unflatten_coarse(const TokenSequence& seq, int q_coarse, int n_s,
                             int n_q) {
  Unflattened out;
  std::size_t prompt_count = 0, target_count = 0;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    switch (seq.segments[i]) {
      case Segment::kSemantic:
        out.s.push_back(seq.ids[i]);
        break;
      case Segment::kPromptCoarse:
        ++prompt_count;
        break;
      case Segment::kTargetCoarse:
        ++target_count;
        break;
    }
  }
  if (prompt_count % q_coarse != 0 || target_count % q_coarse != 0)
    throw DataError("unflatten_coarse: segment length not divisible by q_c");
  out.prompt = codec::TokenGrid(q_coarse, prompt_count / q_coarse);
  out.target = codec::TokenGrid(q_coarse, target_count / q_coarse);
  std::size_t pi = 0, ti = 0;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    const Segment seg = seq.segments[i];
    if (seg == Segment::kSemantic) continue;
    std::size_t& idx = (seg == Segment::kPromptCoarse) ? pi : ti;
    codec::TokenGrid& grid =
        (seg == Segment::kPromptCoarse) ? out.prompt : out.target;
    const int q = static_cast<int>(idx % q_coarse);
    const std::size_t t = idx / q_coarse;
    const int id = seq.ids[i] - n_s - q * n_q;
    if (id < 0 || id >= n_q)
      throw DataError("unflatten_coarse: id outside expected codebook block");
    grid.at(q, t) = id;
    ++idx;
  }
  return out;
}

// ---------------------------------------------------------------------
// TransformerLm
// ---------------------------------------------------------------------

TransformerLm::TransformerLm(const LmHyperParams& hp, std::uint64_t param_seed)
    : hp_(hp) {
  Rng rng(param_seed);
  const int d = hp.width;
  auto normal_mat = [&](std::size_t r, std::size_t c, double scale) {
    Matrix m(r, c);
    for (auto& v : m.data()) v = scale * rng.normal();
    return m;
  };
  params_["tok_emb"] = normal_mat(hp.vocab, d, 0.02);
  if (hp.use_positions)
    params_["pos_emb"] = normal_mat(hp.max_positions, d, 0.05);
  if (hp.segment_kinds > 0)
    params_["seg_emb"] = normal_mat(hp.segment_kinds, d, 0.02);
  for (int b = 0; b < hp.blocks; ++b) {
    const std::string p = "b" + std::to_string(b) + ".";
    params_[p + "ln1.g"] = Matrix(1, d, 1.0);
    params_[p + "ln1.b"] = Matrix(1, d, 0.0);
    // Query and key projections start as noisy copies of a shared identity,
    // so q.k is largest when query and key carry the same position embedding.
    // With a near-zero init instead, attention starts uniform and the
    // gradient that teaches it to align scales like 1/sequence-length, which
    // stalls training on long sequences. Learning is free to move away from
    // the identity; this only removes the plateau at the start.
    params_[p + "attn.wq"] = normal_mat(d, d, 0.02);
    for (int i = 0; i < d; ++i) params_[p + "attn.wq"].at(i, i) += 2.0;
    params_[p + "attn.bq"] = Matrix(1, d, 0.0);
    params_[p + "attn.wk"] = normal_mat(d, d, 0.02);
    for (int i = 0; i < d; ++i) params_[p + "attn.wk"].at(i, i) += 2.0;
    params_[p + "attn.bk"] = Matrix(1, d, 0.0);
    params_[p + "attn.wv"] = normal_mat(d, d, 0.02);
    params_[p + "attn.bv"] = Matrix(1, d, 0.0);
    params_[p + "attn.wo"] = normal_mat(d, d, 0.02);
    params_[p + "attn.bo"] = Matrix(1, d, 0.0);
    params_[p + "ln2.g"] = Matrix(1, d, 1.0);
    params_[p + "ln2.b"] = Matrix(1, d, 0.0);
    params_[p + "mlp.w1"] = normal_mat(d, 4 * d, 0.02);
    params_[p + "mlp.b1"] = Matrix(1, 4 * d, 0.0);
    params_[p + "mlp.w2"] = normal_mat(4 * d, d, 0.02);
    params_[p + "mlp.b2"] = Matrix(1, d, 0.0);
  }
  params_["lnf.g"] = Matrix(1, d, 1.0);
  params_["lnf.b"] = Matrix(1, d, 0.0);
  params_["head.w"] = normal_mat(d, hp.out_vocab, 0.02);
  params_["head.b"] = Matrix(1, hp.out_vocab, 0.0);
  zero_grad();
}

void TransformerLm::zero_grad() {
  for (const auto& [name, p] : params_) {
    auto it = grads_.find(name);
    if (it == grads_.end())
      grads_[name] = Matrix(p.rows(), p.cols(), 0.0);
    else
      std::fill(it->second.data().begin(), it->second.data().end(), 0.0);
  }
}

struct TransformerLm::Cache {
  Matrix x0;  // embeddings
  struct Block {
    Matrix x_in;          // input to the block
    LnCache ln1;
    Matrix ln1_out, q, k, v;
    std::vector<Matrix> att;  // per head, T x T softmax
    Matrix ctx;               // concatenated heads
    Matrix x_mid;             // after attention residual
    LnCache ln2;
    Matrix ln2_out, mlp_pre, mlp_act;
  };
  std::vector<Block> blocks;
  LnCache lnf;
  Matrix lnf_in, lnf_out;
  Matrix logits;
};

Matrix TransformerLm::forward_impl(const LmInput& input, Cache* cache) const {
  const std::size_t t_len = input.tokens.size();
  const int d = hp_.width;
  const int heads = hp_.heads;
  const int dh = d / heads;
  if (t_len > static_cast<std::size_t>(hp_.max_positions))
    throw DataError("sequence exceeds model capacity");
  if (t_len == 0) throw DataError("empty input sequence");

  const Matrix& tok_emb = params_.at("tok_emb");
  Matrix x(t_len, d);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (int id : input.tokens[t]) {
      if (id < 0 || id >= hp_.vocab) throw DataError("token id out of range");
      for (int j = 0; j < d; ++j) x[t][j] += tok_emb[id][j];
    }
    if (hp_.use_positions) {
      if (!input.positions.empty() && input.positions.size() != t_len)
        throw DataError("positions length mismatch");
      const std::size_t pt =
          input.positions.empty()
              ? t
              : static_cast<std::size_t>(input.positions[t]);
      if (pt >= static_cast<std::size_t>(hp_.max_positions))
        throw DataError("position index exceeds model capacity");
      const Matrix& pos = params_.at("pos_emb");
      for (int j = 0; j < d; ++j) x[t][j] += pos[pt][j];
    }
    if (hp_.segment_kinds > 0) {
      if (input.segments.size() != t_len)
        throw DataError("segment ids missing");
      const Matrix& seg = params_.at("seg_emb");
      const int s = input.segments[t];
      if (s < 0 || s >= hp_.segment_kinds)
        throw DataError("segment id out of range");
      for (int j = 0; j < d; ++j) x[t][j] += seg[s][j];
    }
  }
  if (cache) {
    cache->x0 = x;
    cache->blocks.resize(hp_.blocks);
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int b = 0; b < hp_.blocks; ++b) {
    const std::string p = "b" + std::to_string(b) + ".";
    Cache::Block* cb = cache ? &cache->blocks[b] : nullptr;
    if (cb) cb->x_in = x;

    Matrix ln1_out(t_len, d);
    LnCache ln1_cache;
    layer_norm(x, params_.at(p + "ln1.g"), params_.at(p + "ln1.b"), ln1_out,
               cb ? &ln1_cache : nullptr);

    Matrix q(t_len, d), k(t_len, d), v(t_len, d);
    matmul(ln1_out, params_.at(p + "attn.wq"), q, false);
    add_bias(q, params_.at(p + "attn.bq"));
    matmul(ln1_out, params_.at(p + "attn.wk"), k, false);
    add_bias(k, params_.at(p + "attn.bk"));
    matmul(ln1_out, params_.at(p + "attn.wv"), v, false);
    add_bias(v, params_.at(p + "attn.bv"));

    Matrix ctx(t_len, d);
    std::vector<Matrix> att(heads);
    for (int h = 0; h < heads; ++h) {
      Matrix& a = att[h];
      a = Matrix(t_len, t_len);
      const int off = h * dh;
      for (std::size_t i = 0; i < t_len; ++i) {
        const std::size_t jmax = hp_.causal ? i + 1 : t_len;
        double row_max = kNegInf;
        for (std::size_t j = 0; j < jmax; ++j) {
          double s = 0.0;
          for (int e = 0; e < dh; ++e) s += q[i][off + e] * k[j][off + e];
          s *= scale;
          a[i][j] = s;
          row_max = std::max(row_max, s);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < jmax; ++j) {
          a[i][j] = std::exp(a[i][j] - row_max);
          denom += a[i][j];
        }
        for (std::size_t j = 0; j < jmax; ++j) a[i][j] /= denom;
        for (std::size_t j = jmax; j < t_len; ++j) a[i][j] = 0.0;
        for (std::size_t j = 0; j < jmax; ++j) {
          const double w = a[i][j];
          for (int e = 0; e < dh; ++e) ctx[i][off + e] += w * v[j][off + e];
        }
      }
    }

    Matrix attn_out(t_len, d);
    matmul(ctx, params_.at(p + "attn.wo"), attn_out, false);
    add_bias(attn_out, params_.at(p + "attn.bo"));
    Matrix x_mid = x;
    for (std::size_t i = 0; i < x_mid.data().size(); ++i)
      x_mid.data()[i] += attn_out.data()[i];

    Matrix ln2_out(t_len, d);
    LnCache ln2_cache;
    layer_norm(x_mid, params_.at(p + "ln2.g"), params_.at(p + "ln2.b"),
               ln2_out, cb ? &ln2_cache : nullptr);

    Matrix mlp_pre(t_len, 4 * d);
    matmul(ln2_out, params_.at(p + "mlp.w1"), mlp_pre, false);
    add_bias(mlp_pre, params_.at(p + "mlp.b1"));
    Matrix mlp_act(t_len, 4 * d);
    for (std::size_t i = 0; i < mlp_pre.data().size(); ++i)
      mlp_act.data()[i] = gelu(mlp_pre.data()[i]);
    Matrix mlp_out(t_len, d);
    matmul(mlp_act, params_.at(p + "mlp.w2"), mlp_out, false);
    add_bias(mlp_out, params_.at(p + "mlp.b2"));

    Matrix x_next = x_mid;
    for (std::size_t i = 0; i < x_next.data().size(); ++i)
      x_next.data()[i] += mlp_out.data()[i];

    if (cb) {
      cb->ln1 = std::move(ln1_cache);
      cb->ln1_out = std::move(ln1_out);
      cb->q = std::move(q);
      cb->k = std::move(k);
      cb->v = std::move(v);
      cb->att = std::move(att);
      cb->ctx = std::move(ctx);
      cb->x_mid = x_mid;
      cb->ln2 = std::move(ln2_cache);
      cb->ln2_out = std::move(ln2_out);
      cb->mlp_pre = std::move(mlp_pre);
      cb->mlp_act = std::move(mlp_act);
    }
    x = std::move(x_next);
  }

  Matrix lnf_out(t_len, d);
  LnCache lnf_cache;
  layer_norm(x, params_.at("lnf.g"), params_.at("lnf.b"), lnf_out,
             cache ? &lnf_cache : nullptr);
  Matrix logits(t_len, hp_.out_vocab);
  matmul(lnf_out, params_.at("head.w"), logits, false);
  add_bias(logits, params_.at("head.b"));

  if (cache) {
    cache->lnf_in = std::move(x);
    cache->lnf = std::move(lnf_cache);
    cache->lnf_out = std::move(lnf_out);
    cache->logits = logits;
  }
  return logits;
}

namespace {

// Log-softmax loss and dlogits at one position, honoring an optional
// [lo, hi) restriction of the support.
double ce_at_position(const double* logits, int out_vocab, int target, int lo,
                      int hi, double* dlogits) {
  double mx = kNegInf;
  for (int j = lo; j < hi; ++j) mx = std::max(mx, logits[j]);
  double denom = 0.0;
  for (int j = lo; j < hi; ++j) denom += std::exp(logits[j] - mx);
  const double log_denom = std::log(denom) + mx;
  const double loss = log_denom - logits[target];
  if (dlogits) {
    for (int j = 0; j < out_vocab; ++j) dlogits[j] = 0.0;
    for (int j = lo; j < hi; ++j)
      dlogits[j] = std::exp(logits[j] - log_denom);
    dlogits[target] -= 1.0;
  }
  return loss;
}

}  // namespace

Matrix TransformerLm::forward_probs(const LmInput& input) const {
  Matrix logits = forward_impl(input, nullptr);
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    double mx = kNegInf;
    for (std::size_t j = 0; j < logits.cols(); ++j)
      mx = std::max(mx, logits[t][j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      logits[t][j] = std::exp(logits[t][j] - mx);
      denom += logits[t][j];
    }
    for (std::size_t j = 0; j < logits.cols(); ++j) logits[t][j] /= denom;
  }
  return logits;
}

double TransformerLm::loss(const LmInput& input) const {
  const Matrix logits = forward_impl(input, nullptr);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    const int target = input.targets.empty() ? -1 : input.targets[t];
    if (target < 0) continue;
    int lo = 0, hi = hp_.out_vocab;
    if (!input.target_ranges.empty()) {
      lo = input.target_ranges[t].first;
      hi = input.target_ranges[t].second;
    }
    total += ce_at_position(logits[t], hp_.out_vocab, target, lo, hi, nullptr);
    ++count;
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

std::pair<double, std::size_t> TransformerLm::forward_backward(
    const LmInput& input) {
  Cache cache;
  const Matrix logits = forward_impl(input, &cache);
  const std::size_t t_len = logits.rows();
  const int d = hp_.width;
  const int heads = hp_.heads;
  const int dh = d / heads;

  Matrix dlogits(t_len, hp_.out_vocab);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> row(hp_.out_vocab);
  for (std::size_t t = 0; t < t_len; ++t) {
    const int target = input.targets.empty() ? -1 : input.targets[t];
    if (target < 0) continue;
    int lo = 0, hi = hp_.out_vocab;
    if (!input.target_ranges.empty()) {
      lo = input.target_ranges[t].first;
      hi = input.target_ranges[t].second;
    }
    total +=
        ce_at_position(logits[t], hp_.out_vocab, target, lo, hi, row.data());
    for (int j = 0; j < hp_.out_vocab; ++j) dlogits[t][j] = row[j];
    ++count;
  }
  if (count == 0) return {0.0, 0};

  // head
  matmul_at_b(cache.lnf_out, dlogits, grads_["head.w"]);
  bias_grad(dlogits, grads_["head.b"]);
  Matrix dlnf_out(t_len, d);
  matmul_a_bt(dlogits, params_.at("head.w"), dlnf_out, false);
  Matrix dx(t_len, d);
  layer_norm_backward(dlnf_out, cache.lnf, params_.at("lnf.g"), dx,
                      grads_["lnf.g"], grads_["lnf.b"]);

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int b = hp_.blocks - 1; b >= 0; --b) {
    const std::string p = "b" + std::to_string(b) + ".";
    const Cache::Block& cb = cache.blocks[b];

    // MLP branch: x_next = x_mid + gelu(ln2(x_mid) W1 + b1) W2 + b2
    Matrix dmlp_act(t_len, 4 * d);
    matmul_a_bt(dx, params_.at(p + "mlp.w2"), dmlp_act, false);
    matmul_at_b(cb.mlp_act, dx, grads_[p + "mlp.w2"]);
    bias_grad(dx, grads_[p + "mlp.b2"]);
    Matrix dmlp_pre(t_len, 4 * d);
    for (std::size_t i = 0; i < dmlp_pre.data().size(); ++i)
      dmlp_pre.data()[i] =
          dmlp_act.data()[i] * gelu_grad(cb.mlp_pre.data()[i]);
    Matrix dln2_out(t_len, d);
    matmul_a_bt(dmlp_pre, params_.at(p + "mlp.w1"), dln2_out, false);
    matmul_at_b(cb.ln2_out, dmlp_pre, grads_[p + "mlp.w1"]);
    bias_grad(dmlp_pre, grads_[p + "mlp.b1"]);
    // dx currently holds d(x_next); residual passes it to x_mid.
    layer_norm_backward(dln2_out, cb.ln2, params_.at(p + "ln2.g"), dx,
                        grads_[p + "ln2.g"], grads_[p + "ln2.b"]);

    // Attention branch: x_mid = x_in + (heads(ln1(x_in))) Wo + bo
    Matrix dctx(t_len, d);
    matmul_a_bt(dx, params_.at(p + "attn.wo"), dctx, false);
    matmul_at_b(cb.ctx, dx, grads_[p + "attn.wo"]);
    bias_grad(dx, grads_[p + "attn.bo"]);

    Matrix dq(t_len, d), dk(t_len, d), dv(t_len, d);
    for (int h = 0; h < heads; ++h) {
      const Matrix& a = cb.att[h];
      const int off = h * dh;
      for (std::size_t i = 0; i < t_len; ++i) {
        const std::size_t jmax = hp_.causal ? i + 1 : t_len;
        // dA and softmax backward
        double dot = 0.0;
        std::vector<double> da(jmax);
        for (std::size_t j = 0; j < jmax; ++j) {
          double v = 0.0;
          for (int e = 0; e < dh; ++e) v += dctx[i][off + e] * cb.v[j][off + e];
          da[j] = v;
          dot += v * a[i][j];
        }
        for (std::size_t j = 0; j < jmax; ++j) {
          const double ds = a[i][j] * (da[j] - dot) * scale;
          for (int e = 0; e < dh; ++e) {
            dq[i][off + e] += ds * cb.k[j][off + e];
            dk[j][off + e] += ds * cb.q[i][off + e];
          }
          const double w = a[i][j];
          for (int e = 0; e < dh; ++e)
            dv[j][off + e] += w * dctx[i][off + e];
        }
      }
    }

    Matrix dln1_out(t_len, d);
    matmul_a_bt(dq, params_.at(p + "attn.wq"), dln1_out, false);
    matmul_a_bt(dk, params_.at(p + "attn.wk"), dln1_out, true);
    matmul_a_bt(dv, params_.at(p + "attn.wv"), dln1_out, true);
    matmul_at_b(cb.ln1_out, dq, grads_[p + "attn.wq"]);
    matmul_at_b(cb.ln1_out, dk, grads_[p + "attn.wk"]);
    matmul_at_b(cb.ln1_out, dv, grads_[p + "attn.wv"]);
    bias_grad(dq, grads_[p + "attn.bq"]);
    bias_grad(dk, grads_[p + "attn.bk"]);
    bias_grad(dv, grads_[p + "attn.bv"]);
    layer_norm_backward(dln1_out, cb.ln1, params_.at(p + "ln1.g"), dx,
                        grads_[p + "ln1.g"], grads_[p + "ln1.b"]);
  }

  // Embeddings
  Matrix& dtok = grads_["tok_emb"];
  for (std::size_t t = 0; t < t_len; ++t) {
    for (int id : input.tokens[t])
      for (int j = 0; j < d; ++j) dtok[id][j] += dx[t][j];
    if (hp_.use_positions) {
      Matrix& dpos = grads_["pos_emb"];
      const std::size_t pt =
          input.positions.empty()
              ? t
              : static_cast<std::size_t>(input.positions[t]);
      for (int j = 0; j < d; ++j) dpos[pt][j] += dx[t][j];
    }
    if (hp_.segment_kinds > 0) {
      Matrix& dseg = grads_["seg_emb"];
      const int s = input.segments[t];
      for (int j = 0; j < d; ++j) dseg[s][j] += dx[t][j];
    }
  }
  return {total, count};
}

std::vector<double> TransformerLm::train(const std::vector<LmInput>& data,
                                         const TrainOptions& opts) {
  if (data.empty()) throw DataError("train: no training sequences");
  std::map<std::string, Matrix> velocity;
  for (const auto& [name, p] : params_)
    velocity[name] = Matrix(p.rows(), p.cols(), 0.0);

  std::vector<double> trace;
  std::size_t cursor = 0;
  for (int step = 0; step < opts.steps; ++step) {
    zero_grad();
    double loss_sum = 0.0;
    std::size_t pred_count = 0;
    const int batch =
        std::min<std::size_t>(opts.batch_size, data.size());
    for (int i = 0; i < batch; ++i) {
      const auto [l, n] = forward_backward(data[cursor]);
      cursor = (cursor + 1) % data.size();
      loss_sum += l;
      pred_count += n;
    }
    const double loss =
        pred_count > 0 ? loss_sum / static_cast<double>(pred_count) : 0.0;
    if (!std::isfinite(loss))
      throw DivergenceError("training loss diverged", step);
    trace.push_back(loss);

    const double grad_scale =
        pred_count > 0 ? 1.0 / static_cast<double>(pred_count) : 0.0;
    double norm_sq = 0.0;
    for (auto& [name, g] : grads_) {
      for (auto& v : g.data()) {
        v *= grad_scale;
        norm_sq += v * v;
      }
    }
    double clip = 1.0;
    const double norm = std::sqrt(norm_sq);
    if (opts.clip_norm > 0.0 && norm > opts.clip_norm)
      clip = opts.clip_norm / norm;
    for (auto& [name, g] : grads_) {
      Matrix& vel = velocity[name];
      Matrix& p = params_[name];
      for (std::size_t i = 0; i < g.data().size(); ++i) {
        vel.data()[i] = opts.momentum * vel.data()[i] -
                        opts.learning_rate * clip * g.data()[i];
        p.data()[i] += vel.data()[i];
      }
    }
  }
  return trace;
}

// ---------------------------------------------------------------------
// Incremental decoding
// ---------------------------------------------------------------------

struct TransformerLm::DecodeState {
  std::vector<Matrix> k, v;  // per block, max_positions x d
  std::size_t length = 0;
};

void TransformerLm::DecodeStateDeleter::operator()(DecodeState* s) const {
  delete s;
}

std::unique_ptr<TransformerLm::DecodeState, TransformerLm::DecodeStateDeleter>
TransformerLm::make_decode_state() const {
  std::unique_ptr<DecodeState, DecodeStateDeleter> st(new DecodeState());
  st->k.assign(hp_.blocks, Matrix(hp_.max_positions, hp_.width));
  st->v.assign(hp_.blocks, Matrix(hp_.max_positions, hp_.width));
  return st;
}

std::vector<double> TransformerLm::decode_step(DecodeState& state,
                                               const std::vector<int>& tokens,
                                               int segment,
                                               int position) const {
  const int d = hp_.width;
  const int heads = hp_.heads;
  const int dh = d / heads;
  const std::size_t t = state.length;
  if (t >= static_cast<std::size_t>(hp_.max_positions))
    throw DataError("sequence exceeds model capacity");

  std::vector<double> x(d, 0.0);
  const Matrix& tok_emb = params_.at("tok_emb");
  for (int id : tokens) {
    if (id < 0 || id >= hp_.vocab) throw DataError("token id out of range");
    for (int j = 0; j < d; ++j) x[j] += tok_emb[id][j];
  }
  if (hp_.use_positions) {
    const std::size_t pt =
        position < 0 ? t : static_cast<std::size_t>(position);
    if (pt >= static_cast<std::size_t>(hp_.max_positions))
      throw DataError("position index exceeds model capacity");
    const Matrix& pos = params_.at("pos_emb");
    for (int j = 0; j < d; ++j) x[j] += pos[pt][j];
  }
  if (hp_.segment_kinds > 0) {
    if (segment < 0 || segment >= hp_.segment_kinds)
      throw DataError("segment id out of range");
    const Matrix& seg = params_.at("seg_emb");
    for (int j = 0; j < d; ++j) x[j] += seg[segment][j];
  }

  auto ln_row = [d](const std::vector<double>& in, const Matrix& g,
                    const Matrix& b, std::vector<double>& out) {
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    for (int j = 0; j < d; ++j) out[j] = g[0][j] * (in[j] - mean) * rstd + b[0][j];
  };
  auto linear_row = [](const std::vector<double>& in, const Matrix& w,
                       const Matrix& b, std::vector<double>& out) {
    const std::size_t m = w.rows(), n = w.cols();
    for (std::size_t j = 0; j < n; ++j) out[j] = b[0][j];
    for (std::size_t i = 0; i < m; ++i) {
      const double v = in[i];
      const double* wi = w[i];
      for (std::size_t j = 0; j < n; ++j) out[j] += v * wi[j];
    }
  };

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> h(d), q(d), ctx(d), tmp(d), m1(4 * d), m2(4 * d);
  for (int b = 0; b < hp_.blocks; ++b) {
    const std::string p = "b" + std::to_string(b) + ".";
    ln_row(x, params_.at(p + "ln1.g"), params_.at(p + "ln1.b"), h);
    linear_row(h, params_.at(p + "attn.wq"), params_.at(p + "attn.bq"), q);
    std::vector<double> krow(d), vrow(d);
    linear_row(h, params_.at(p + "attn.wk"), params_.at(p + "attn.bk"), krow);
    linear_row(h, params_.at(p + "attn.wv"), params_.at(p + "attn.bv"), vrow);
    Matrix& kc = state.k[b];
    Matrix& vc = state.v[b];
    for (int j = 0; j < d; ++j) {
      kc[t][j] = krow[j];
      vc[t][j] = vrow[j];
    }
    std::fill(ctx.begin(), ctx.end(), 0.0);
    for (int hd = 0; hd < heads; ++hd) {
      const int off = hd * dh;
      std::vector<double> s(t + 1);
      double mx = kNegInf;
      for (std::size_t j = 0; j <= t; ++j) {
        double v = 0.0;
        for (int e = 0; e < dh; ++e) v += q[off + e] * kc[j][off + e];
        s[j] = v * scale;
        mx = std::max(mx, s[j]);
      }
      double denom = 0.0;
      for (auto& v : s) {
        v = std::exp(v - mx);
        denom += v;
      }
      for (std::size_t j = 0; j <= t; ++j) {
        const double w = s[j] / denom;
        for (int e = 0; e < dh; ++e) ctx[off + e] += w * vc[j][off + e];
      }
    }
    linear_row(ctx, params_.at(p + "attn.wo"), params_.at(p + "attn.bo"),
               tmp);
    for (int j = 0; j < d; ++j) x[j] += tmp[j];
    ln_row(x, params_.at(p + "ln2.g"), params_.at(p + "ln2.b"), h);
    linear_row(h, params_.at(p + "mlp.w1"), params_.at(p + "mlp.b1"), m1);
    for (int j = 0; j < 4 * d; ++j) m2[j] = gelu(m1[j]);
    linear_row(m2, params_.at(p + "mlp.w2"), params_.at(p + "mlp.b2"), tmp);
    for (int j = 0; j < d; ++j) x[j] += tmp[j];
  }
  ln_row(x, params_.at("lnf.g"), params_.at("lnf.b"), h);
  std::vector<double> logits(hp_.out_vocab);
  linear_row(h, params_.at("head.w"), params_.at("head.b"), logits);
  ++state.length;
  return logits;
}

// ---------------------------------------------------------------------
// Coarse model
// ---------------------------------------------------------------------

CoarseLm CoarseLm::create(int n_s, int n_q, int q_coarse,
                          const LmHyperParams& shape, std::uint64_t seed) {
  CoarseLm lm;
  lm.n_s = n_s;
  lm.n_q = n_q;
  lm.q_coarse = q_coarse;
  LmHyperParams hp = shape;
  hp.vocab = n_s + q_coarse * n_q;
  hp.out_vocab = q_coarse * n_q;
  hp.causal = true;
  hp.segment_kinds = 3;  // semantic / prompt / target
  lm.net = TransformerLm(hp, seed);
  return lm;
}

namespace {

// Segment-relative frame indices. Semantic elements carry their own
// frame index. Acoustic elements carry the frame index of the element
// they predict (the next one in flattened order), so the query that
// predicts frame t shares a position embedding with semantic key s_t;
// a near-identity query-key map then generalizes across positions.
// The last prompt element predicts target frame 0.
std::vector<int> segment_frame_positions(const TokenSequence& seq,
                                         int q_coarse) {
  std::vector<int> positions(seq.ids.size());
  std::size_t sem_i = 0, prompt_i = 0, target_i = 0;
  std::size_t last_prompt = seq.ids.size();
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    switch (seq.segments[i]) {
      case Segment::kSemantic:
        positions[i] = static_cast<int>(sem_i++);
        break;
      case Segment::kPromptCoarse:
        positions[i] = static_cast<int>(++prompt_i / q_coarse);
        last_prompt = i;
        break;
      case Segment::kTargetCoarse:
        positions[i] = static_cast<int>(++target_i / q_coarse);
        break;
    }
  }
  if (last_prompt < seq.ids.size()) positions[last_prompt] = 0;
  return positions;
}

// Position of target element (q, t) under the scheme above.
int target_element_position(int t, int q, int q_coarse) {
  return (t * q_coarse + q + 1) / q_coarse;
}

}  // namespace

LmInput coarse_training_input(const CoarseLm& lm, const TokenSequence& seq) {
  LmInput input;
  const std::size_t n = seq.ids.size();
  input.tokens.resize(n);
  input.segments.resize(n);
  input.positions = segment_frame_positions(seq, lm.q_coarse);
  input.targets.assign(n, -1);
  input.target_ranges.assign(n, {0, 0});
  for (std::size_t i = 0; i < n; ++i) {
    input.tokens[i] = {seq.ids[i]};
    input.segments[i] = static_cast<int>(seq.segments[i]);
    if (i + 1 < n && seq.segments[i + 1] == Segment::kTargetCoarse) {
      const int out_id = seq.ids[i + 1] - lm.n_s;
      input.targets[i] = out_id;
      const int q = out_id / lm.n_q;
      input.target_ranges[i] = {q * lm.n_q, (q + 1) * lm.n_q};
    }
  }
  return input;
}

namespace {

int sample_from_logits(std::span<const double> logits, int lo, int hi,
                       double temperature, Rng& rng) {
  if (temperature <= 0.0) {
    int best = lo;
    for (int j = lo; j < hi; ++j)
      if (logits[j] > logits[best]) best = j;
    return best;
  }
  double mx = kNegInf;
  for (int j = lo; j < hi; ++j) mx = std::max(mx, logits[j]);
  std::vector<double> probs(hi - lo);
  double denom = 0.0;
  for (int j = lo; j < hi; ++j) {
    probs[j - lo] = std::exp((logits[j] - mx) / temperature);
    denom += probs[j - lo];
  }
  double target = rng.uniform() * denom;
  for (int j = 0; j < hi - lo; ++j) {
    target -= probs[j];
    if (target <= 0.0) return lo + j;
  }
  return hi - 1;
}

}  // namespace

codec::TokenGrid sample_coarse(const CoarseLm& lm,
                               const semantic::SemanticTokens& s,
                               const codec::TokenGrid& prompt_coarse, int t_a,
                               double temperature, std::uint64_t seed) {
  if (t_a < 1) throw DataError("sample_coarse: t_a must be >= 1");
  const codec::TokenGrid empty_target(lm.q_coarse, 0);
  const TokenSequence prefix = flatten_coarse(
      s, prompt_coarse.top_rows(lm.q_coarse), empty_target, lm.q_coarse,
      lm.n_s, lm.n_q);
  const std::size_t total =
      prefix.ids.size() + static_cast<std::size_t>(lm.q_coarse) * t_a;
  if (total > static_cast<std::size_t>(lm.net.hyperparams().max_positions))
    throw DataError("sample_coarse: sequence exceeds model capacity");

  Rng rng(seed);
  auto state = lm.net.make_decode_state();
  const std::vector<int> prefix_pos =
      segment_frame_positions(prefix, lm.q_coarse);
  std::vector<double> logits;
  for (std::size_t i = 0; i < prefix.ids.size(); ++i)
    logits = lm.net.decode_step(*state, {prefix.ids[i]},
                                static_cast<int>(prefix.segments[i]),
                                prefix_pos[i]);

  codec::TokenGrid grid(lm.q_coarse, t_a);
  for (int t = 0; t < t_a; ++t) {
    for (int q = 0; q < lm.q_coarse; ++q) {
      const int lo = q * lm.n_q;
      const int out_id =
          sample_from_logits(logits, lo, lo + lm.n_q, temperature, rng);
      const int tok = out_id - lo;
      grid.at(q, t) = tok;
      const bool last = (t == t_a - 1) && (q == lm.q_coarse - 1);
      if (!last)
        logits = lm.net.decode_step(
            *state, {lm.n_s + q * lm.n_q + tok},
            static_cast<int>(Segment::kTargetCoarse),
            target_element_position(t, q, lm.q_coarse));
    }
  }
  return grid;
}

// ---------------------------------------------------------------------
// Fine models
// ---------------------------------------------------------------------

FineLm FineLm::create(int n_q, int q_total, int q_coarse,
                      const LmHyperParams& shape, std::uint64_t seed) {
  FineLm lm;
  lm.n_q = n_q;
  lm.q_total = q_total;
  lm.q_coarse = q_coarse;
  for (int q = q_coarse; q < q_total; ++q) {
    LmHyperParams hp = shape;
    hp.vocab = q_total * n_q;
    hp.out_vocab = n_q;
    hp.causal = false;
    hp.segment_kinds = 2;  // prompt / target
    lm.levels.emplace_back(hp, stable_hash(seed, "fine", std::to_string(q)));
  }
  return lm;
}

LmInput fine_training_input(const FineLm& lm, std::size_t level_index,
                            const codec::TokenGrid& prompt,
                            const codec::TokenGrid& target) {
  if (level_index >= lm.levels.size())
    throw DataError("fine_training_input: no model for this level");
  const std::size_t q = lm.q_coarse + level_index;  // row being predicted
  if (prompt.rows() != static_cast<std::size_t>(lm.q_total) ||
      target.rows() <= q)
    throw DataError("fine_training_input: grid rows inconsistent with level");
  LmInput input;
  const std::size_t tp = prompt.cols(), tt = target.cols();
  input.tokens.resize(tp + tt);
  input.segments.resize(tp + tt);
  input.positions.resize(tp + tt);
  input.targets.assign(tp + tt, -1);
  for (std::size_t t = 0; t < tp; ++t) {
    auto& ids = input.tokens[t];
    for (int r = 0; r < lm.q_total; ++r)
      ids.push_back(r * lm.n_q + prompt.at(r, t));
    input.segments[t] = 0;
    input.positions[t] = static_cast<int>(t);
  }
  for (std::size_t t = 0; t < tt; ++t) {
    auto& ids = input.tokens[tp + t];
    for (std::size_t r = 0; r < q; ++r)
      ids.push_back(static_cast<int>(r) * lm.n_q +
                    target.at(r, t));
    input.segments[tp + t] = 1;
    input.positions[tp + t] = static_cast<int>(t);
    input.targets[tp + t] = target.at(q, t);
  }
  return input;
}

codec::TokenGrid sample_fine(const FineLm& lm, const codec::TokenGrid& prompt,
                             const codec::TokenGrid& coarse,
                             double temperature, std::uint64_t seed) {
  if (coarse.rows() != static_cast<std::size_t>(lm.q_coarse))
    throw DataError("sample_fine: coarse grid must have q_coarse rows");
  if (lm.levels.size() !=
      static_cast<std::size_t>(lm.q_total - lm.q_coarse))
    throw DataError("sample_fine: missing level models");
  const std::size_t t_a = coarse.cols();
  codec::TokenGrid grid(lm.q_total, t_a);
  for (int q = 0; q < lm.q_coarse; ++q)
    for (std::size_t t = 0; t < t_a; ++t) grid.at(q, t) = coarse.at(q, t);

  for (std::size_t level = 0; level < lm.levels.size(); ++level) {
    const std::size_t q = lm.q_coarse + level;
    // Build the conditional input from rows < q of the working grid.
    LmInput input =
        fine_training_input(lm, level, prompt, grid.top_rows(q + 1));
    std::fill(input.targets.begin(), input.targets.end(), -1);
    const Matrix probs = lm.levels[level].forward_probs(input);
    Rng rng(stable_hash(seed, "fine-level", std::to_string(q)));
    const std::size_t tp = prompt.cols();
    for (std::size_t t = 0; t < t_a; ++t) {
      const double* p = probs[tp + t];
      int tok = 0;
      if (temperature <= 0.0) {
        for (int j = 1; j < lm.n_q; ++j)
          if (p[j] > p[tok]) tok = j;
      } else {
        // Temperature re-shapes the already-normalized distribution.
        std::vector<double> w(lm.n_q);
        double denom = 0.0;
        for (int j = 0; j < lm.n_q; ++j) {
          w[j] = std::pow(std::max(p[j], 1e-300), 1.0 / temperature);
          denom += w[j];
        }
        double target = rng.uniform() * denom;
        for (int j = 0; j < lm.n_q; ++j) {
          target -= w[j];
          if (target <= 0.0) {
            tok = j;
            break;
          }
          tok = j;
        }
      }
      grid.at(q, t) = tok;
    }
  }
  return grid;
}

// ---------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------

namespace {

void pack_net(const TransformerLm& net, const std::string& prefix,
              TensorMap& out) {
  const auto& hp = net.hyperparams();
  out[prefix + "hp"] = {
      {9},
      {static_cast<double>(hp.vocab), static_cast<double>(hp.out_vocab),
       static_cast<double>(hp.width), static_cast<double>(hp.blocks),
       static_cast<double>(hp.heads), static_cast<double>(hp.max_positions),
       hp.causal ? 1.0 : 0.0, hp.use_positions ? 1.0 : 0.0,
       static_cast<double>(hp.segment_kinds)}};
  for (const auto& [name, p] : net.params())
    out[prefix + name] = {{static_cast<std::uint32_t>(p.rows()),
                           static_cast<std::uint32_t>(p.cols())},
                          p.data()};
}

TransformerLm unpack_net(const TensorMap& t, const std::string& prefix,
                         const std::string& path) {
  const auto hp_it = t.find(prefix + "hp");
  if (hp_it == t.end() || hp_it->second.values.size() != 9)
    throw FormatError("lm container missing hyperparams: " + path);
  const auto& v = hp_it->second.values;
  LmHyperParams hp;
  hp.vocab = static_cast<int>(v[0]);
  hp.out_vocab = static_cast<int>(v[1]);
  hp.width = static_cast<int>(v[2]);
  hp.blocks = static_cast<int>(v[3]);
  hp.heads = static_cast<int>(v[4]);
  hp.max_positions = static_cast<int>(v[5]);
  hp.causal = v[6] != 0.0;
  hp.use_positions = v[7] != 0.0;
  hp.segment_kinds = static_cast<int>(v[8]);
  TransformerLm net(hp, 0);
  for (auto& [name, p] : net.params()) {
    const auto it = t.find(prefix + name);
    if (it == t.end() || it->second.dims.size() != 2 ||
        it->second.dims[0] != p.rows() || it->second.dims[1] != p.cols())
      throw FormatError("lm container missing tensor '" + name + "': " + path);
    p.data() = it->second.values;
  }
  return net;
}

}  // namespace

void save_coarse(const CoarseLm& lm, const std::string& path) {
  TensorMap t;
  t["meta"] = {{3},
               {static_cast<double>(lm.n_s), static_cast<double>(lm.n_q),
                static_cast<double>(lm.q_coarse)}};
  pack_net(lm.net, "net.", t);
  save_container(path, "CLMQ", t);
}

CoarseLm load_coarse(const std::string& path) {
  const TensorMap t = load_container(path, "CLMQ");
  const auto meta = t.find("meta");
  if (meta == t.end() || meta->second.values.size() != 3)
    throw FormatError("coarse lm container missing meta: " + path);
  CoarseLm lm;
  lm.n_s = static_cast<int>(meta->second.values[0]);
  lm.n_q = static_cast<int>(meta->second.values[1]);
  lm.q_coarse = static_cast<int>(meta->second.values[2]);
  lm.net = unpack_net(t, "net.", path);
  return lm;
}

void save_fine(const FineLm& lm, const std::string& path) {
  TensorMap t;
  t["meta"] = {{3},
               {static_cast<double>(lm.n_q), static_cast<double>(lm.q_total),
                static_cast<double>(lm.q_coarse)}};
  for (std::size_t i = 0; i < lm.levels.size(); ++i)
    pack_net(lm.levels[i], "level" + std::to_string(lm.q_coarse + i) + ".", t);
  save_container(path, "FLMQ", t);
}

FineLm load_fine(const std::string& path) {
  const TensorMap t = load_container(path, "FLMQ");
  const auto meta = t.find("meta");
  if (meta == t.end() || meta->second.values.size() != 3)
    throw FormatError("fine lm container missing meta: " + path);
  FineLm lm;
  lm.n_q = static_cast<int>(meta->second.values[0]);
  lm.q_total = static_cast<int>(meta->second.values[1]);
  lm.q_coarse = static_cast<int>(meta->second.values[2]);
  for (int q = lm.q_coarse; q < lm.q_total; ++q)
    lm.levels.push_back(unpack_net(t, "level" + std::to_string(q) + ".", path));
  return lm;
}

}  // namespace nacanon::lm
