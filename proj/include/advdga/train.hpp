#pragma once

#include <cstdint>
#include <vector>

#include "advdga/model.hpp"

namespace advdga {

struct TrainConfig {
  int max_epochs = 50;
  int patience = 5;
  int batch_size = 512;
  float learning_rate = 1e-3f;
  std::uint64_t seed = 0;
  int label_malicious = 1;
};

// Paired encoded inputs and labels (benign = 0, malicious = 1).
struct LabeledDataset {
  std::vector<EncodedDomain> x;
  std::vector<float> y;

  std::size_t size() const { return x.size(); }
  void push(const EncodedDomain& e, float label) {
    x.push_back(e);
    y.push_back(label);
  }
};

class Adam {
 public:
  Adam(std::vector<TensorPtr> params, float lr, float beta1 = 0.9f,
       float beta2 = 0.999f, float eps = 1e-8f);
  // Applies one update from the gradients currently in the parameters.
  void step();
  void zero_grad();

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<float>> m_, v_;
  float lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

// Standard training with early stopping: returns the parameters of the
// epoch with the best validation loss; stops after `patience` epochs
// without improvement.  Throws EmptyDataset when either split is empty.
Model train(const LabeledDataset& train_split, const LabeledDataset& val_split,
            const ArchMeta& arch, const TrainConfig& cfg);

// Mean BCE loss of the model on a dataset (inference only, chunked).
double dataset_loss(const Model& m, const LabeledDataset& ds);
// Balanced accuracy: mean of per-class accuracies at the z >= 0 threshold.
double balanced_accuracy(const Model& m, const LabeledDataset& ds);

}  // namespace advdga
