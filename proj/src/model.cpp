// Copyright 2026 The cfqa Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cfqa/model.hpp"

#include <cmath>

#include "cfqa/random.hpp"

namespace cfqa {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

double gelu_grad(double x) {
  const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(inner);
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
}

Matrix add_row(Matrix m, const Matrix& bias) {
  m.rowwise() += bias.row(0);
  return m;
}

Matrix layer_norm_backward(const LayerNormCache& cache, const Matrix& gamma,
                           const Matrix& dy, Matrix& dgamma, Matrix& dbeta) {
  dgamma += dy.cwiseProduct(cache.xhat).colwise().sum();
  dbeta += dy.colwise().sum();
  Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  const double d = static_cast<double>(dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_dxhat = dxhat.row(r).sum() / d;
    const double mean_dxhat_xhat = dxhat.row(r).dot(cache.xhat.row(r)) / d;
    dx.row(r) = cache.rstd(r) * (dxhat.row(r).array() - mean_dxhat -
                                 cache.xhat.row(r).array() * mean_dxhat_xhat)
                                    .matrix();
  }
  return dx;
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

Matrix gather(std::span<const Matrix* const> reps, std::span<const RowRef> refs,
              Eigen::Index width) {
  Matrix x(static_cast<Eigen::Index>(refs.size()), width);
  for (std::size_t k = 0; k < refs.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) =
        reps[static_cast<std::size_t>(refs[k].rep)]->row(refs[k].row);
  }
  return x;
}

void scatter(const Matrix& dx, std::span<const RowRef> refs,
             std::span<Matrix> d_reps) {
  for (std::size_t k = 0; k < refs.size(); ++k) {
    d_reps[static_cast<std::size_t>(refs[k].rep)].row(refs[k].row) +=
        dx.row(static_cast<Eigen::Index>(k));
  }
}

void fill_normal(Matrix& m, Eigen::Index rows, Eigen::Index cols, double std,
                 Rng& rng) {
  m.resize(rows, cols);
  std::normal_distribution<double> dist(0.0, std);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void fill_const(Matrix& m, Eigen::Index rows, Eigen::Index cols, double v) {
  m.setConstant(rows, cols, v);
}

void init_mlp(MlpParams& p, int in, int hidden, int out, Rng& rng) {
  if (hidden > 0) {
    fill_normal(p.w1, in, hidden, 1.0 / std::sqrt(in), rng);
    fill_const(p.b1, 1, hidden, 0.0);
    fill_normal(p.w2, hidden, out, 1.0 / std::sqrt(hidden), rng);
  } else {
    p.w1.resize(0, 0);
    p.b1.resize(0, 0);
    fill_normal(p.w2, in, out, 1.0 / std::sqrt(in), rng);
  }
  fill_const(p.b2, 1, out, 0.0);
}

}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + kGeluCubic * x * x * x)));
}

int type_class(AnswerType type) {
  switch (type) {
    case AnswerType::kYes: return kTypeYes;
    case AnswerType::kNo: return kTypeNo;
    case AnswerType::kSpan: return kTypeSpan;
  }
  return kTypeSpan;
}

void BackboneConfig::validate() const {
  if (hidden <= 0 || layers <= 0 || heads <= 0 || ffn <= 0 || max_len <= 0 ||
      max_segments <= 0 || head_hidden < 0) {
    throw Error("backbone config values must be positive");
  }
  if (hidden % heads != 0) throw Error("hidden must be divisible by heads");
}

nlohmann::json BackboneConfig::to_json() const {
  return {{"hidden", hidden},   {"layers", layers},
          {"heads", heads},     {"ffn", ffn},
          {"max_len", max_len}, {"max_segments", max_segments},
          {"head_hidden", head_hidden},
          {"seed", seed}};
}

BackboneConfig BackboneConfig::from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.max_segments = j.at("max_segments").get<int>();
  c.head_hidden = j.at("head_hidden").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

HeadOutputs HeadOutputs::zeros_like(const HeadOutputs& o) {
  HeadOutputs z;
  z.para = Matrix::Zero(o.para.rows(), o.para.cols());
  z.sent = Matrix::Zero(o.sent.rows(), o.sent.cols());
  z.start = Vector::Zero(o.start.size());
  z.end = Vector::Zero(o.end.size());
  z.type = Vector::Zero(o.type.size());
  z.answerable = o.answerable;
  return z;
}

bool HeadOutputs::same_shape(const HeadOutputs& o) const {
  return para.rows() == o.para.rows() && para.cols() == o.para.cols() &&
         sent.rows() == o.sent.rows() && sent.cols() == o.sent.cols() &&
         start.size() == o.start.size() && end.size() == o.end.size() &&
         type.size() == o.type.size();
}

Vector masked(const Vector& logits, std::span<const std::uint8_t> answerable) {
  Vector out = logits;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!answerable[static_cast<std::size_t>(i)]) out(i) = kNegInf;
  }
  return out;
}

Vector masked_softmax(const Vector& logits,
                      std::span<const std::uint8_t> answerable) {
  Vector p = Vector::Zero(logits.size());
  double mx = kNegInf;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (answerable[static_cast<std::size_t>(i)]) mx = std::max(mx, logits(i));
  }
  if (mx == kNegInf) return p;
  double z = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (answerable[static_cast<std::size_t>(i)]) {
      p(i) = std::exp(logits(i) - mx);
      z += p(i);
    }
  }
  return p / z;
}

std::vector<std::pair<std::string, Matrix*>> Parameters::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out = {{"tok_emb", &tok_emb},
                                                      {"pos_emb", &pos_emb},
                                                      {"seg_emb", &seg_emb}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& L = layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    for (auto [name, m] : std::initializer_list<std::pair<const char*, Matrix*>>{
             {"ln1_g", &L.ln1_g}, {"ln1_b", &L.ln1_b}, {"wq", &L.wq},
             {"bq", &L.bq},       {"wk", &L.wk},       {"bk", &L.bk},
             {"wv", &L.wv},       {"bv", &L.bv},       {"wo", &L.wo},
             {"bo", &L.bo},       {"ln2_g", &L.ln2_g}, {"ln2_b", &L.ln2_b},
             {"w1", &L.w1},       {"b1", &L.b1},       {"w2", &L.w2},
             {"b2", &L.b2}}) {
      out.emplace_back(p + name, m);
    }
  }
  out.emplace_back("lnf_g", &lnf_g);
  out.emplace_back("lnf_b", &lnf_b);
  for (auto [name, mlp] : std::initializer_list<std::pair<const char*, MlpParams*>>{
           {"para", &para}, {"sent", &sent}, {"type", &type}}) {
    const std::string p = std::string(name) + ".";
    out.emplace_back(p + "w1", &mlp->w1);
    out.emplace_back(p + "b1", &mlp->b1);
    out.emplace_back(p + "w2", &mlp->w2);
    out.emplace_back(p + "b2", &mlp->b2);
  }
  out.emplace_back("start_w", &start_w);
  out.emplace_back("start_b", &start_b);
  out.emplace_back("end_w", &end_w);
  out.emplace_back("end_b", &end_b);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> Parameters::tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<Parameters*>(this)->tensors()) {
    out.emplace_back(name, m);
  }
  return out;
}

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  z.set_zero();
  return z;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : tensors()) n += static_cast<std::size_t>(m->size());
  return n;
}

void Parameters::set_zero() {
  for (auto& [name, m] : tensors()) m->setZero();
}

Parameters& Parameters::operator+=(const Parameters& other) {
  auto mine = tensors();
  auto theirs = other.tensors();
  for (std::size_t k = 0; k < mine.size(); ++k) *mine[k].second += *theirs[k].second;
  return *this;
}

Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                  LayerNormCache* cache) {
  const auto d = static_cast<double>(x.cols());
  Matrix xhat(x.rows(), x.cols());
  Vector rstd(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).sum() / d;
    const auto centered = x.row(r).array() - mu;
    const double var = centered.square().sum() / d;
    rstd(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = (centered * rstd(r)).matrix();
  }
  Matrix y = xhat.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

Matrix mlp_forward(const MlpParams& p, const Matrix& x, MlpCache* cache) {
  if (p.w1.size() == 0) {
    if (cache) cache->x = x;
    return add_row(x * p.w2, p.b2);
  }
  Matrix u = add_row(x * p.w1, p.b1);
  Matrix a = u.unaryExpr([](double v) { return gelu(v); });
  Matrix y = add_row(a * p.w2, p.b2);
  if (cache) {
    cache->x = x;
    cache->u = std::move(u);
    cache->a = std::move(a);
  }
  return y;
}

Matrix mlp_backward(const MlpParams& p, const MlpCache& cache, const Matrix& dy,
                    MlpParams& grads) {
  grads.b2 += dy.colwise().sum();
  if (p.w1.size() == 0) {
    grads.w2.noalias() += cache.x.transpose() * dy;
    return dy * p.w2.transpose();
  }
  grads.w2.noalias() += cache.a.transpose() * dy;
  Matrix da = dy * p.w2.transpose();
  Matrix du = da.cwiseProduct(cache.u.unaryExpr([](double v) { return gelu_grad(v); }));
  grads.w1.noalias() += cache.x.transpose() * du;
  grads.b1 += du.colwise().sum();
  return du * p.w1.transpose();
}

Model::Model(const BackboneConfig& config, std::size_t vocab_size)
    : config_(config), vocab_size_(vocab_size) {
  config_.validate();
  if (vocab_size == 0) throw Error("empty vocabulary");
  const int d = config_.hidden;
  const auto V = static_cast<Eigen::Index>(vocab_size);
  Rng rng(mix_seed(config_.seed, 0x6d6f64656cULL));
  auto& P = params_;
  fill_normal(P.tok_emb, V, d, 1.0, rng);
  fill_normal(P.pos_emb, config_.max_len, d, 0.5, rng);
  fill_normal(P.seg_emb, config_.max_segments, d, 0.5, rng);
  const double w = 1.0 / std::sqrt(d);
  const double w_out = w / std::sqrt(2.0 * config_.layers);
  P.layers.resize(static_cast<std::size_t>(config_.layers));
  for (auto& L : P.layers) {
    fill_const(L.ln1_g, 1, d, 1.0);
    fill_const(L.ln1_b, 1, d, 0.0);
    fill_normal(L.wq, d, d, w, rng);
    fill_const(L.bq, 1, d, 0.0);
    // Keys start equal to queries, so identical tokens attend to each other.
    L.wk = L.wq;
    fill_const(L.bk, 1, d, 0.0);
    fill_normal(L.wv, d, d, w, rng);
    fill_const(L.bv, 1, d, 0.0);
    fill_normal(L.wo, d, d, w_out, rng);
    fill_const(L.bo, 1, d, 0.0);
    fill_const(L.ln2_g, 1, d, 1.0);
    fill_const(L.ln2_b, 1, d, 0.0);
    fill_normal(L.w1, d, config_.ffn, w, rng);
    fill_const(L.b1, 1, config_.ffn, 0.0);
    fill_normal(L.w2, config_.ffn, d, w_out * std::sqrt(static_cast<double>(d) / config_.ffn), rng);
    fill_const(L.b2, 1, d, 0.0);
  }
  fill_const(P.lnf_g, 1, d, 1.0);
  fill_const(P.lnf_b, 1, d, 0.0);
  init_mlp(P.para, d, config_.head_hidden, 2, rng);
  init_mlp(P.sent, d, config_.head_hidden, 2, rng);
  init_mlp(P.type, d, config_.head_hidden, kNumTypes, rng);
  fill_normal(P.start_w, d, 1, w, rng);
  fill_const(P.start_b, 1, 1, 0.0);
  fill_normal(P.end_w, d, 1, w, rng);
  fill_const(P.end_b, 1, 1, 0.0);
}

EncodedSequence Model::encode(Layout layout, EncoderTape* tape) const {
  const auto n = static_cast<Eigen::Index>(layout.size());
  if (n == 0) throw Error("encode: empty layout");
  if (n > config_.max_len) throw Error("encode: layout exceeds max_len");
  const int d = config_.hidden;
  const int heads = config_.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& P = params_;

  const auto segments = segment_ids(layout);
  if (segments.back() >= config_.max_segments) {
    throw Error("encode: more paragraphs than max_segments allows");
  }
  Matrix x(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const TokenId t = layout.tokens[static_cast<std::size_t>(r)];
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_) {
      throw Error("encode: token id outside the vocabulary");
    }
    x.row(r) = P.tok_emb.row(t) + P.pos_emb.row(r) +
               P.seg_emb.row(segments[static_cast<std::size_t>(r)]);
  }
  if (tape) {
    tape->tokens = layout.tokens;
    tape->segments = segments;
    tape->layers.clear();
  }
  for (const auto& L : P.layers) {
    LayerTape t;
    t.h1 = layer_norm(x, L.ln1_g, L.ln1_b, &t.ln1);
    t.q = add_row(t.h1 * L.wq, L.bq);
    t.k = add_row(t.h1 * L.wk, L.bk);
    t.v = add_row(t.h1 * L.wv, L.bv);
    t.attn.resize(n, d);
    t.probs.resize(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      Matrix s = t.q.middleCols(h * dh, dh) * t.k.middleCols(h * dh, dh).transpose();
      s *= scale;
      softmax_rows(s);
      t.attn.middleCols(h * dh, dh).noalias() = s * t.v.middleCols(h * dh, dh);
      t.probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    t.x_mid = x + add_row(t.attn * L.wo, L.bo);
    t.h2 = layer_norm(t.x_mid, L.ln2_g, L.ln2_b, &t.ln2);
    t.u = add_row(t.h2 * L.w1, L.b1);
    t.a = t.u.unaryExpr([](double v) { return gelu(v); });
    Matrix next = t.x_mid + add_row(t.a * L.w2, L.b2);
    if (tape) {
      t.x_in = std::move(x);
      tape->layers.push_back(std::move(t));
    }
    x = std::move(next);
  }
  EncodedSequence out;
  out.rows = layer_norm(x, P.lnf_g, P.lnf_b, tape ? &tape->lnf : nullptr);
  out.layout = std::move(layout);
  return out;
}

void Model::encode_backward(const EncoderTape& tape, const Matrix& d_rows,
                            Parameters& grads) const {
  const int d = config_.hidden;
  const int heads = config_.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& P = params_;

  Matrix dx = layer_norm_backward(tape.lnf, P.lnf_g, d_rows, grads.lnf_g, grads.lnf_b);
  for (std::size_t l = P.layers.size(); l-- > 0;) {
    const auto& L = P.layers[l];
    auto& G = grads.layers[l];
    const auto& t = tape.layers[l];

    // x_out = x_mid + gelu(LN2(x_mid) W1 + b1) W2 + b2
    G.w2.noalias() += t.a.transpose() * dx;
    G.b2 += dx.colwise().sum();
    Matrix du = (dx * L.w2.transpose())
                    .cwiseProduct(t.u.unaryExpr([](double v) { return gelu_grad(v); }));
    G.w1.noalias() += t.h2.transpose() * du;
    G.b1 += du.colwise().sum();
    Matrix dh2 = du * L.w1.transpose();
    Matrix d_mid = dx + layer_norm_backward(t.ln2, L.ln2_g, dh2, G.ln2_g, G.ln2_b);

    // x_mid = x_in + Attn(LN1(x_in)) Wo + bo
    G.wo.noalias() += t.attn.transpose() * d_mid;
    G.bo += d_mid.colwise().sum();
    Matrix d_attn = d_mid * L.wo.transpose();
    Matrix dq(d_attn.rows(), d), dk(d_attn.rows(), d), dv(d_attn.rows(), d);
    for (int h = 0; h < heads; ++h) {
      const auto& p = t.probs[static_cast<std::size_t>(h)];
      const auto da = d_attn.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh).noalias() = p.transpose() * da;
      Matrix dp = da * t.v.middleCols(h * dh, dh).transpose();
      Vector rowdot = dp.cwiseProduct(p).rowwise().sum();
      Matrix ds = p.cwiseProduct(dp.colwise() - rowdot);
      ds *= scale;
      dq.middleCols(h * dh, dh).noalias() = ds * t.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = ds.transpose() * t.q.middleCols(h * dh, dh);
    }
    G.wq.noalias() += t.h1.transpose() * dq;
    G.bq += dq.colwise().sum();
    G.wk.noalias() += t.h1.transpose() * dk;
    G.bk += dk.colwise().sum();
    G.wv.noalias() += t.h1.transpose() * dv;
    G.bv += dv.colwise().sum();
    Matrix dh1 = dq * L.wq.transpose();
    dh1.noalias() += dk * L.wk.transpose();
    dh1.noalias() += dv * L.wv.transpose();
    dx = d_mid + layer_norm_backward(t.ln1, L.ln1_g, dh1, G.ln1_g, G.ln1_b);
  }
  for (Eigen::Index r = 0; r < dx.rows(); ++r) {
    grads.tok_emb.row(tape.tokens[static_cast<std::size_t>(r)]) += dx.row(r);
    grads.pos_emb.row(r) += dx.row(r);
    grads.seg_emb.row(tape.segments[static_cast<std::size_t>(r)]) += dx.row(r);
  }
}

std::vector<int> segment_ids(const Layout& layout) {
  std::vector<int> seg(layout.size(), 0);
  for (std::size_t k = 0; k < layout.paragraphs.size(); ++k) {
    const auto& p = layout.paragraphs[k];
    for (int r = p.start; r <= p.end; ++r) {
      seg[static_cast<std::size_t>(r)] = static_cast<int>(k) + 1;
    }
  }
  return seg;
}

HeadPlan factual_plan(const Layout& layout, int rep) {
  HeadPlan plan;
  plan.length = layout.size();
  plan.answerable = layout.answerable();
  for (const auto& p : layout.paragraphs) {
    plan.para.push_back({rep, p.head_row()});
    for (int s : p.sentence_starts) plan.sent.push_back({rep, s});
  }
  for (std::size_t r = 0; r < layout.size(); ++r) {
    plan.span.push_back({{rep, static_cast<int>(r)}, static_cast<int>(r)});
  }
  plan.type.push_back({rep, 0});
  return plan;
}

HeadPlan branch_plan(std::span<const EncodedSequence* const> reps,
                     std::span<const int> rep_ids, const Layout& target) {
  if (reps.size() != target.paragraphs.size() || rep_ids.size() != reps.size()) {
    throw Error("branch_plan: need one branch representation per paragraph");
  }
  HeadPlan plan;
  plan.length = target.size();
  plan.answerable = target.answerable();
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (reps[i]->example_id != reps.front()->example_id) {
      throw Error("branch_plan: mismatched example ids");
    }
    const int id = rep_ids[i];
    const auto& src = reps[i]->layout.paragraphs.at(reps[i]->focal);
    const auto& dst = target.paragraphs[i];
    if (src.length() != dst.length() ||
        src.sentence_starts.size() != dst.sentence_starts.size()) {
      throw Error("branch_plan: focal paragraph misaligned with the target");
    }
    plan.para.push_back({id, src.head_row()});
    for (int s : src.sentence_starts) plan.sent.push_back({id, s});
    for (int r = 0; r < src.length(); ++r) {
      plan.span.push_back({{id, src.start + r}, dst.start + r});
    }
    plan.type.push_back({id, 0});
  }
  return plan;
}

HeadOutputs Model::heads(const HeadPlan& plan,
                         std::span<const Matrix* const> reps,
                         HeadCache* cache) const {
  const auto d = static_cast<Eigen::Index>(config_.hidden);
  const auto& P = params_;
  HeadOutputs out;
  out.answerable = plan.answerable;
  out.para = mlp_forward(P.para, gather(reps, plan.para, d), cache ? &cache->para : nullptr);
  out.sent = mlp_forward(P.sent, gather(reps, plan.sent, d), cache ? &cache->sent : nullptr);
  Matrix type = mlp_forward(P.type, gather(reps, plan.type, d), cache ? &cache->type : nullptr);
  out.type = type.colwise().sum().transpose();

  std::vector<RowRef> span_refs;
  span_refs.reserve(plan.span.size());
  for (const auto& [ref, pos] : plan.span) span_refs.push_back(ref);
  Matrix rows = gather(reps, span_refs, d);
  const Vector s = rows * P.start_w.col(0);
  const Vector e = rows * P.end_w.col(0);
  out.start = Vector::Zero(static_cast<Eigen::Index>(plan.length));
  out.end = Vector::Zero(static_cast<Eigen::Index>(plan.length));
  for (std::size_t k = 0; k < plan.span.size(); ++k) {
    const auto pos = plan.span[k].second;
    out.start(pos) = s(static_cast<Eigen::Index>(k)) + P.start_b(0, 0);
    out.end(pos) = e(static_cast<Eigen::Index>(k)) + P.end_b(0, 0);
  }
  if (cache) cache->span_rows = std::move(rows);
  return out;
}

void Model::heads_backward(const HeadPlan& plan, const HeadCache& cache,
                           const HeadOutputs& grad, std::span<Matrix> d_reps,
                           Parameters& grads) const {
  const auto& P = params_;
  scatter(mlp_backward(P.para, cache.para, grad.para, grads.para), plan.para, d_reps);
  scatter(mlp_backward(P.sent, cache.sent, grad.sent, grads.sent), plan.sent, d_reps);
  Matrix dtype(static_cast<Eigen::Index>(plan.type.size()), kNumTypes);
  dtype.rowwise() = grad.type.transpose();
  scatter(mlp_backward(P.type, cache.type, dtype, grads.type), plan.type, d_reps);

  const auto k = static_cast<Eigen::Index>(plan.span.size());
  Vector ds(k), de(k);
  std::vector<RowRef> span_refs;
  span_refs.reserve(plan.span.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& [ref, pos] = plan.span[static_cast<std::size_t>(i)];
    ds(i) = grad.start(pos);
    de(i) = grad.end(pos);
    span_refs.push_back(ref);
  }
  grads.start_w.col(0).noalias() += cache.span_rows.transpose() * ds;
  grads.end_w.col(0).noalias() += cache.span_rows.transpose() * de;
  grads.start_b(0, 0) += ds.sum();
  grads.end_b(0, 0) += de.sum();
  Matrix drows = ds * P.start_w.col(0).transpose();
  drows.noalias() += de * P.end_w.col(0).transpose();
  scatter(drows, span_refs, d_reps);
}

HeadOutputs Model::factual_heads(const EncodedSequence& rep) const {
  const Matrix* reps[] = {&rep.rows};
  return heads(factual_plan(rep.layout), reps);
}

Vector Model::para_logits(const EncodedSequence& rep, std::size_t i) const {
  if (i >= rep.layout.paragraphs.size()) throw Error("para_logits: unknown paragraph");
  Matrix x = rep.rows.row(rep.layout.paragraphs[i].head_row());
  return mlp_forward(params_.para, x, nullptr).row(0).transpose();
}

Vector Model::sent_logits(const EncodedSequence& rep, std::size_t i,
                          std::size_t j) const {
  if (i >= rep.layout.paragraphs.size() ||
      j >= rep.layout.paragraphs[i].sentence_starts.size()) {
    throw Error("sent_logits: unknown sentence");
  }
  Matrix x = rep.rows.row(rep.layout.paragraphs[i].sentence_starts[j]);
  return mlp_forward(params_.sent, x, nullptr).row(0).transpose();
}

std::pair<Vector, Vector> Model::span_logits(const Matrix& rows) const {
  Vector s = (rows * params_.start_w.col(0)).array() + params_.start_b(0, 0);
  Vector e = (rows * params_.end_w.col(0)).array() + params_.end_b(0, 0);
  return {s, e};
}

Vector Model::type_logits_factual(const EncodedSequence& rep) const {
  Matrix x = rep.rows.row(0);
  return mlp_forward(params_.type, x, nullptr).row(0).transpose();
}

Vector Model::type_logits_branch(std::span<const EncodedSequence> reps) const {
  if (reps.empty()) throw Error("type_logits_branch: no representations");
  Vector sum = Vector::Zero(kNumTypes);
  for (const auto& rep : reps) sum += type_logits_factual(rep);
  return sum;
}

Matrix concat_branch_spans(std::span<const EncodedSequence> reps) {
  Eigen::Index total = 0;
  for (const auto& rep : reps) {
    if (rep.example_id != reps.front().example_id) {
      throw Error("concat_branch_spans: mismatched example ids");
    }
    total += rep.layout.paragraphs.at(rep.focal).length();
  }
  const Eigen::Index d = reps.empty() ? 0 : reps.front().rows.cols();
  Matrix out(total, d);
  Eigen::Index at = 0;
  for (const auto& rep : reps) {
    const auto& p = rep.layout.paragraphs[rep.focal];
    out.middleRows(at, p.length()) = rep.rows.middleRows(p.start, p.length());
    at += p.length();
  }
  return out;
}

}  // namespace cfqa
