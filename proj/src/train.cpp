#include "advdga/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "advdga/errors.hpp"
#include "advdga/rng.hpp"

namespace advdga {

Adam::Adam(std::vector<TensorPtr> params, float lr, float beta1, float beta2,
           float eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const TensorPtr& p : params_) {
    m_.emplace_back(p->v.size(), 0.f);
    v_.emplace_back(p->v.size(), 0.f);
  }
}

void Adam::step() {
  ++t_;
  const float bc1 = 1.f - std::pow(beta1_, static_cast<float>(t_));
  const float bc2 = 1.f - std::pow(beta2_, static_cast<float>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    for (std::size_t j = 0; j < p.v.size(); ++j) {
      float g = p.g[j];
      m_[i][j] = beta1_ * m_[i][j] + (1.f - beta1_) * g;
      v_[i][j] = beta2_ * v_[i][j] + (1.f - beta2_) * g * g;
      float mhat = m_[i][j] / bc1;
      float vhat = v_[i][j] / bc2;
      p.v[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (const TensorPtr& p : params_) p->zero_grad();
}

double dataset_loss(const Model& m, const LabeledDataset& ds) {
  if (ds.size() == 0) throw EmptyDataset("loss over empty dataset");
  std::vector<float> z = logits_for_domains(m, ds.x);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double zi = z[i], y = ds.y[i];
    acc += std::max(zi, 0.0) - zi * y + std::log1p(std::exp(-std::fabs(zi)));
  }
  return acc / static_cast<double>(z.size());
}

double balanced_accuracy(const Model& m, const LabeledDataset& ds) {
  std::vector<float> z = logits_for_domains(m, ds.x);
  double hit[2] = {0, 0}, total[2] = {0, 0};
  for (std::size_t i = 0; i < z.size(); ++i) {
    int label = ds.y[i] >= 0.5f ? 1 : 0;
    int pred = z[i] >= 0.f ? 1 : 0;
    total[label] += 1;
    if (pred == label) hit[label] += 1;
  }
  double acc = 0.0;
  int classes = 0;
  for (int c = 0; c < 2; ++c) {
    if (total[c] > 0) {
      acc += hit[c] / total[c];
      ++classes;
    }
  }
  return classes ? acc / classes : 0.0;
}

Model train(const LabeledDataset& train_split, const LabeledDataset& val_split,
            const ArchMeta& arch, const TrainConfig& cfg) {
  if (train_split.size() == 0 || val_split.size() == 0) {
    throw EmptyDataset("train and validation splits must be nonempty");
  }
  if (cfg.patience < 1) throw InvalidConfig("patience must be >= 1");
  if (cfg.batch_size < 2 || cfg.batch_size % 2 != 0) {
    throw InvalidConfig("batch_size must be even and >= 2");
  }

  Rng rng(cfg.seed);
  Model model = Model::init(arch, rng.next_u64());
  model.set_parameter_grads(true);
  Adam opt(model.parameters(), cfg.learning_rate);

  std::vector<std::size_t> order(train_split.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Model best = model.clone();
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      std::vector<EncodedDomain> bx(count);
      std::vector<float> by(count);
      for (std::size_t i = 0; i < count; ++i) {
        bx[i] = train_split.x[order[start + i]];
        by[i] = train_split.y[order[start + i]];
      }
      Tape tape;
      TensorPtr v = model_embed(tape, model, bx);
      TensorPtr z = model_logits(tape, model, v);
      TensorPtr loss = tape.bce_loss(z, by);
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
    }
    double val = dataset_loss(model, val_split);
    std::fprintf(stderr, "epoch %d: val loss %.6f\n", epoch + 1, val);
    if (val < best_val) {
      best_val = val;
      best = model.clone();
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
  }
  model.set_parameter_grads(false);
  return best;
}

}  // namespace advdga
