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

// Reference backbone (a small pre-LN transformer encoder) and the QA heads.
//
// Everything runs in double precision with hand-written backward passes so
// that gradients can be checked against finite differences.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfqa/corpus.hpp"
#include "cfqa/layout.hpp"

namespace cfqa {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Answer-type classes of the type head. kEntity is never a synthetic label.
enum TypeClass : int { kTypeYes = 0, kTypeNo = 1, kTypeSpan = 2, kTypeEntity = 3 };
inline constexpr int kNumTypes = 4;

int type_class(AnswerType type);

struct BackboneConfig {
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int ffn = 128;
  int max_len = 128;
  // Segment 0 is [CLS] question [SEP]; paragraph k is segment k + 1.
  int max_segments = 16;
  // Hidden width of the para/sent/type classifiers; 0 makes them linear.
  int head_hidden = 64;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static BackboneConfig from_json(const nlohmann::json& j);
};

// Encoder output O (n x d) with its position map.
struct EncodedSequence {
  std::string example_id;
  Layout layout;
  Matrix rows;
  // Index (in layout order) of the paragraph a branch pass is about.
  std::size_t focal = 0;
};

struct HeadOutputs {
  Matrix para;   // paragraphs x 2
  Matrix sent;   // sentences x 2, layout order
  Vector start;  // n
  Vector end;    // n
  Vector type;   // 4
  // 1 where a span may start/end.
  std::vector<std::uint8_t> answerable;

  static HeadOutputs zeros_like(const HeadOutputs& other);
  bool same_shape(const HeadOutputs& other) const;
};

// Logits with non-answerable positions set to -inf.
Vector masked(const Vector& logits, std::span<const std::uint8_t> answerable);
// Softmax over unmasked positions; masked positions get exactly 0.
Vector masked_softmax(const Vector& logits,
                      std::span<const std::uint8_t> answerable);

// g: optional hidden layer with GELU, then an output layer.
struct MlpParams {
  Matrix w1, b1;  // empty when linear
  Matrix w2, b2;
};

struct LayerParams {
  Matrix ln1_g, ln1_b;
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln2_g, ln2_b;
  Matrix w1, b1, w2, b2;
};

struct Parameters {
  Matrix tok_emb, pos_emb, seg_emb;
  std::vector<LayerParams> layers;
  Matrix lnf_g, lnf_b;
  MlpParams para, sent, type;
  Matrix start_w, start_b, end_w, end_b;

  // Every tensor in a fixed order, with a stable name.
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;
  Parameters zeros_like() const;
  std::size_t count() const;
  void set_zero();
  Parameters& operator+=(const Parameters& other);
};

struct LayerNormCache {
  Matrix xhat;
  Vector rstd;
};

struct LayerTape {
  Matrix x_in;
  LayerNormCache ln1;
  Matrix h1, q, k, v;
  std::vector<Matrix> probs;
  Matrix attn;
  Matrix x_mid;
  LayerNormCache ln2;
  Matrix h2, u, a;
};

// Segment id of every row of `layout`.
std::vector<int> segment_ids(const Layout& layout);

struct EncoderTape {
  TokenSeq tokens;
  std::vector<int> segments;
  std::vector<LayerTape> layers;
  LayerNormCache lnf;
};

struct MlpCache {
  Matrix x, u, a;
};

// Rows of one of several representations.
struct RowRef {
  int rep = 0;
  int row = 0;
};

// Which rows feed which head, for one HeadOutputs. Factual outputs read a
// single representation; branch outputs read paragraph i from the i-th
// branch representation.
struct HeadPlan {
  std::vector<RowRef> para;
  std::vector<RowRef> sent;
  // (source row, target position) pairs for the span heads.
  std::vector<std::pair<RowRef, int>> span;
  std::vector<RowRef> type;  // summed
  std::size_t length = 0;    // n of the target layout
  std::vector<std::uint8_t> answerable;
};

HeadPlan factual_plan(const Layout& layout, int rep = 0);
// `reps[i]` is the branch representation for paragraph i of `target`.
HeadPlan branch_plan(std::span<const EncodedSequence* const> reps,
                     std::span<const int> rep_ids, const Layout& target);

struct HeadCache {
  MlpCache para, sent, type;
  Matrix span_rows;
};

class Model {
 public:
  Model(const BackboneConfig& config, std::size_t vocab_size);

  const BackboneConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  Parameters& params() { return params_; }
  const Parameters& params() const { return params_; }

  EncodedSequence encode(Layout layout, EncoderTape* tape = nullptr) const;
  // Accumulates parameter gradients given dL/d(rows).
  void encode_backward(const EncoderTape& tape, const Matrix& d_rows,
                       Parameters& grads) const;

  // Classifier g on the head row of paragraph i (see ParagraphRows).
  Vector para_logits(const EncodedSequence& rep, std::size_t i) const;
  // Classifier g on the first row of sentence j of paragraph i.
  Vector sent_logits(const EncodedSequence& rep, std::size_t i,
                     std::size_t j) const;
  // Two linear maps over every row. Unmasked; see masked().
  std::pair<Vector, Vector> span_logits(const Matrix& rows) const;
  Vector type_logits_factual(const EncodedSequence& rep) const;
  // Sum over reps of g(rep[0]).
  Vector type_logits_branch(std::span<const EncodedSequence> reps) const;

  HeadOutputs heads(const HeadPlan& plan,
                    std::span<const Matrix* const> reps,
                    HeadCache* cache = nullptr) const;
  // `grad` holds dL/d(outputs); adds dL/d(rep rows) into `d_reps`.
  void heads_backward(const HeadPlan& plan, const HeadCache& cache,
                      const HeadOutputs& grad, std::span<Matrix> d_reps,
                      Parameters& grads) const;

  HeadOutputs factual_heads(const EncodedSequence& rep) const;

 private:
  BackboneConfig config_;
  std::size_t vocab_size_;
  Parameters params_;
};

// Rows of paragraph reps[i].focal taken from reps[i], concatenated in
// paragraph order (the context-aligned M-bar / G-bar matrix).
Matrix concat_branch_spans(std::span<const EncodedSequence> reps);

// Building blocks, exposed for tests.
Matrix mlp_forward(const MlpParams& p, const Matrix& x, MlpCache* cache);
Matrix mlp_backward(const MlpParams& p, const MlpCache& cache,
                    const Matrix& dy, MlpParams& grads);
Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                  LayerNormCache* cache);
double gelu(double x);

}  // namespace cfqa
