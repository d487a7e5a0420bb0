#include "activation.hpp"
#include "hypml/encoder.hpp"
#include "hypml/error.hpp"

#include <cmath>

namespace hypml::encoder {
namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr double kEmbeddingInitStd = 0.02;

struct LayerNormCache {
  Matrix normalized;  // (x - mean) * rstd
  Vector rstd;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache& cache) {
  const Index rows = x.rows();
  const double width = static_cast<double>(x.cols());
  cache.normalized.resize(rows, x.cols());
  cache.rstd.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).sum() / width;
    const double var = (x.row(r).array() - mean).square().sum() / width;
    cache.rstd(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.normalized.row(r) = (x.row(r).array() - mean) * cache.rstd(r);
  }
  Matrix out = cache.normalized.array().rowwise() * gain.row(0).array();
  out.rowwise() += bias.row(0);
  return out;
}

Matrix layer_norm_backward(const LayerNormCache& cache, const Matrix& gain, const Matrix& upstream,
                           Matrix& d_gain, Matrix& d_bias) {
  d_gain += upstream.cwiseProduct(cache.normalized).colwise().sum();
  d_bias += upstream.colwise().sum();
  const Matrix d_norm = upstream.array().rowwise() * gain.row(0).array();
  const double width = static_cast<double>(upstream.cols());
  Matrix dx(upstream.rows(), upstream.cols());
  for (Index r = 0; r < upstream.rows(); ++r) {
    const double mean_d = d_norm.row(r).sum() / width;
    const double mean_dn = d_norm.row(r).dot(cache.normalized.row(r)) / width;
    dx.row(r) = cache.rstd(r) *
                (d_norm.row(r).array() - mean_d - cache.normalized.row(r).array() * mean_dn);
  }
  return dx;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix out = x * w;
  out.rowwise() += b.row(0);
  return out;
}

void softmax_rows(Matrix& s) {
  for (Index r = 0; r < s.rows(); ++r) {
    const double peak = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - peak).exp();
    s.row(r) /= s.row(r).sum();
  }
}

struct BlockCache {
  Matrix input;
  LayerNormCache ln1;
  Matrix attn_in, q, k, v;
  std::vector<Matrix> weights;  // per head, T x T softmax
  Matrix heads_out;
  Matrix mid;
  LayerNormCache ln2;
  Matrix mlp_in, hidden_pre, hidden;
};

struct ImageCache {
  Matrix patches;
  std::vector<BlockCache> blocks;
  LayerNormCache final_ln;
};

struct VitCache final : Cache {
  std::vector<ImageCache> images;
};

}  // namespace

MicroVit::MicroVit(VitSpec spec, Rng& rng) : spec_(spec) {
  validate(spec_);
  const Index w = spec_.width;
  const Index patch_dim = spec_.channels * spec_.patch_size * spec_.patch_size;
  const Index tokens = spec_.num_patches() + 1;
  const bool patch_trainable = !spec_.freeze_patch_projection;

  auto linear = [&](const std::string& name, Index in, Index out, std::size_t& wi, std::size_t& bi) {
    wi = params_.add(name + ".weight", detail::fan_in_uniform(in, out, in, rng), true);
    bi = params_.add(name + ".bias", Matrix::Zero(1, out), false);
  };
  auto norm = [&](const std::string& name, std::size_t& gi, std::size_t& bi) {
    gi = params_.add(name + ".gain", Matrix::Ones(1, w), true);
    bi = params_.add(name + ".bias", Matrix::Zero(1, w), false);
  };

  patch_weight_ = params_.add("patch.weight", detail::fan_in_uniform(patch_dim, w, patch_dim, rng),
                              true, patch_trainable);
  patch_bias_ = params_.add("patch.bias", Matrix::Zero(1, w), false, patch_trainable);
  class_token_ = params_.add("class_token", detail::normal_fill(1, w, kEmbeddingInitStd, rng), false);
  position_ = params_.add("position", detail::normal_fill(tokens, w, kEmbeddingInitStd, rng), true);

  for (Index b = 0; b < spec_.depth; ++b) {
    const std::string p = "block." + std::to_string(b);
    BlockIndex idx{};
    norm(p + ".ln1", idx.ln1_gain, idx.ln1_bias);
    linear(p + ".attn.q", w, w, idx.wq, idx.bq);
    linear(p + ".attn.k", w, w, idx.wk, idx.bk);
    linear(p + ".attn.v", w, w, idx.wv, idx.bv);
    linear(p + ".attn.out", w, w, idx.wo, idx.bo);
    norm(p + ".ln2", idx.ln2_gain, idx.ln2_bias);
    linear(p + ".mlp.fc1", w, spec_.mlp_width, idx.w1, idx.b1);
    linear(p + ".mlp.fc2", spec_.mlp_width, w, idx.w2, idx.b2);
    blocks_.push_back(idx);
  }
  norm("final_norm", final_gain_, final_bias_);
}

std::size_t MicroVit::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  fail(ErrorKind::Config, "micro vit has no parameter '" + std::string(name) + "'");
}

Matrix MicroVit::patchify(const Eigen::Ref<const Vector>& image) const {
  const Index side = spec_.image_size;
  const Index p = spec_.patch_size;
  const Index grid = side / p;
  Matrix patches(grid * grid, spec_.channels * p * p);
  for (Index gy = 0; gy < grid; ++gy) {
    for (Index gx = 0; gx < grid; ++gx) {
      Index col = 0;
      for (Index c = 0; c < spec_.channels; ++c) {
        for (Index dy = 0; dy < p; ++dy) {
          for (Index dx = 0; dx < p; ++dx) {
            patches(gy * grid + gx, col++) = image(c * side * side + (gy * p + dy) * side + gx * p + dx);
          }
        }
      }
    }
  }
  return patches;
}

Matrix MicroVit::forward(const Matrix& inputs, std::unique_ptr<Cache>& cache) const {
  require(inputs.cols() == spec_.input_dim(), ErrorKind::Data, "micro vit: input width mismatch");
  const Index w = spec_.width;
  const Index heads = spec_.heads;
  const Index head_dim = w / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const Index tokens = spec_.num_patches() + 1;

  auto store = std::make_unique<VitCache>();
  store->images.resize(static_cast<std::size_t>(inputs.rows()));
  Matrix out(inputs.rows(), w);

  for (Index n = 0; n < inputs.rows(); ++n) {
    ImageCache& ic = store->images[static_cast<std::size_t>(n)];
    ic.patches = patchify(inputs.row(n).transpose());

    Matrix x(tokens, w);
    x.row(0) = params_[class_token_].value.row(0);
    x.bottomRows(tokens - 1) = affine(ic.patches, params_[patch_weight_].value, params_[patch_bias_].value);
    x += params_[position_].value;

    ic.blocks.resize(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const BlockIndex& bi = blocks_[b];
      BlockCache& bc = ic.blocks[b];
      bc.input = x;
      bc.attn_in = layer_norm(x, params_[bi.ln1_gain].value, params_[bi.ln1_bias].value, bc.ln1);
      bc.q = affine(bc.attn_in, params_[bi.wq].value, params_[bi.bq].value);
      bc.k = affine(bc.attn_in, params_[bi.wk].value, params_[bi.bk].value);
      bc.v = affine(bc.attn_in, params_[bi.wv].value, params_[bi.bv].value);
      bc.heads_out.resize(tokens, w);
      bc.weights.resize(static_cast<std::size_t>(heads));
      for (Index h = 0; h < heads; ++h) {
        Matrix s = scale * (bc.q.middleCols(h * head_dim, head_dim) *
                            bc.k.middleCols(h * head_dim, head_dim).transpose());
        softmax_rows(s);
        bc.heads_out.middleCols(h * head_dim, head_dim) = s * bc.v.middleCols(h * head_dim, head_dim);
        bc.weights[static_cast<std::size_t>(h)] = std::move(s);
      }
      bc.mid = x + affine(bc.heads_out, params_[bi.wo].value, params_[bi.bo].value);
      bc.mlp_in = layer_norm(bc.mid, params_[bi.ln2_gain].value, params_[bi.ln2_bias].value, bc.ln2);
      bc.hidden_pre = affine(bc.mlp_in, params_[bi.w1].value, params_[bi.b1].value);
      bc.hidden = detail::gelu(bc.hidden_pre);
      x = bc.mid + affine(bc.hidden, params_[bi.w2].value, params_[bi.b2].value);
    }

    const Matrix y = layer_norm(x, params_[final_gain_].value, params_[final_bias_].value, ic.final_ln);
    out.row(n) = y.row(0);
  }
  cache = std::move(store);
  return out;
}

Matrix MicroVit::backward(const Cache& cache, const Matrix& upstream, std::span<Matrix> grads) const {
  const auto& store = dynamic_cast<const VitCache&>(cache);
  const Index w = spec_.width;
  const Index heads = spec_.heads;
  const Index head_dim = w / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const Index tokens = spec_.num_patches() + 1;
  const Index side = spec_.image_size;
  const Index p = spec_.patch_size;
  const Index grid = side / p;

  Matrix input_grad(upstream.rows(), spec_.input_dim());
  for (Index n = 0; n < upstream.rows(); ++n) {
    const ImageCache& ic = store.images[static_cast<std::size_t>(n)];
    Matrix g = Matrix::Zero(tokens, w);
    g.row(0) = upstream.row(n);
    g = layer_norm_backward(ic.final_ln, params_[final_gain_].value, g, grads[final_gain_],
                            grads[final_bias_]);

    for (std::size_t b = blocks_.size(); b-- > 0;) {
      const BlockIndex& bi = blocks_[b];
      const BlockCache& bc = ic.blocks[b];

      // MLP branch.
      grads[bi.w2] += bc.hidden.transpose() * g;
      grads[bi.b2] += g.colwise().sum();
      Matrix d_hidden = detail::gelu_backward(bc.hidden_pre, g * params_[bi.w2].value.transpose());
      grads[bi.w1] += bc.mlp_in.transpose() * d_hidden;
      grads[bi.b1] += d_hidden.colwise().sum();
      const Matrix d_mlp_in = d_hidden * params_[bi.w1].value.transpose();
      g += layer_norm_backward(bc.ln2, params_[bi.ln2_gain].value, d_mlp_in, grads[bi.ln2_gain],
                               grads[bi.ln2_bias]);

      // Attention branch.
      grads[bi.wo] += bc.heads_out.transpose() * g;
      grads[bi.bo] += g.colwise().sum();
      const Matrix d_heads = g * params_[bi.wo].value.transpose();
      Matrix dq(tokens, w), dk(tokens, w), dv(tokens, w);
      for (Index h = 0; h < heads; ++h) {
        const Matrix& a = bc.weights[static_cast<std::size_t>(h)];
        const auto d_out = d_heads.middleCols(h * head_dim, head_dim);
        const Matrix d_weights = d_out * bc.v.middleCols(h * head_dim, head_dim).transpose();
        dv.middleCols(h * head_dim, head_dim) = a.transpose() * d_out;
        Matrix d_scores(tokens, tokens);
        for (Index r = 0; r < tokens; ++r) {
          const double inner = d_weights.row(r).dot(a.row(r));
          d_scores.row(r) = a.row(r).array() * (d_weights.row(r).array() - inner);
        }
        d_scores *= scale;
        dq.middleCols(h * head_dim, head_dim) = d_scores * bc.k.middleCols(h * head_dim, head_dim);
        dk.middleCols(h * head_dim, head_dim) = d_scores.transpose() * bc.q.middleCols(h * head_dim, head_dim);
      }
      grads[bi.wq] += bc.attn_in.transpose() * dq;
      grads[bi.bq] += dq.colwise().sum();
      grads[bi.wk] += bc.attn_in.transpose() * dk;
      grads[bi.bk] += dk.colwise().sum();
      grads[bi.wv] += bc.attn_in.transpose() * dv;
      grads[bi.bv] += dv.colwise().sum();
      const Matrix d_attn_in = dq * params_[bi.wq].value.transpose() +
                               dk * params_[bi.wk].value.transpose() +
                               dv * params_[bi.wv].value.transpose();
      g += layer_norm_backward(bc.ln1, params_[bi.ln1_gain].value, d_attn_in, grads[bi.ln1_gain],
                               grads[bi.ln1_bias]);
    }

    grads[position_] += g;
    grads[class_token_] += g.row(0);
    const auto d_embed = g.bottomRows(tokens - 1);
    if (params_[patch_weight_].trainable) {
      grads[patch_weight_] += ic.patches.transpose() * d_embed;
      grads[patch_bias_] += d_embed.colwise().sum();
    }
    const Matrix d_patches = d_embed * params_[patch_weight_].value.transpose();
    for (Index gy = 0; gy < grid; ++gy) {
      for (Index gx = 0; gx < grid; ++gx) {
        Index col = 0;
        for (Index c = 0; c < spec_.channels; ++c) {
          for (Index dy = 0; dy < p; ++dy) {
            for (Index dx = 0; dx < p; ++dx) {
              input_grad(n, c * side * side + (gy * p + dy) * side + gx * p + dx) =
                  d_patches(gy * grid + gx, col++);
            }
          }
        }
      }
    }
  }
  return input_grad;
}

}  // namespace hypml::encoder
