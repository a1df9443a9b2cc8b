// Copyright 2026 The photonvae Authors
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

// Simulates SPACS and SPATS click statistics, trains a small classifier and
// reports held-out accuracy and latent separation.

#include <cstdio>

#include "photonvae/detector_model.hpp"
#include "photonvae/training.hpp"
#include "photonvae/workflows.hpp"

int main() {
  using namespace photonvae;

  const DetectorConfig detector{6, 1.0};
  for (double m : {0.5, 1.3, 3.0}) {
    const auto spacs = observed_mean(SourceSpec::make(SourceKind::Spacs, m), detector);
    const auto spats = observed_mean(SourceSpec::make(SourceKind::Spats, m), detector);
    std::printf("mean %.1f: observed clicks SPACS %.3f, SPATS %.3f\n", m, spacs, spats);
  }

  const auto ds = generate_dataset(binary_meta(1.3, detector, 100, 500, 7));
  const auto split = split_stratified(ds, 7);
  const auto train = make_features(split.train, 5);
  const auto val = make_features(split.validation, 5);
  const auto test = make_features(split.test, 5);

  VaeModel model(network_for(5, 2), 7);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 128;
  const auto history = train_model(model, train, val, cfg, 7);

  const auto ev = evaluate(model, test);
  const auto latent = export_latent(model, test);
  std::printf("trained %d epochs (best %d)\n", history.epochs_run, history.best_epoch);
  std::printf("test accuracy %.3f on %zu rows\n", ev.accuracy, ev.confusion.total());
  std::printf("confusion [[%zu, %zu], [%zu, %zu]]\n", ev.confusion(0, 0), ev.confusion(0, 1),
              ev.confusion(1, 0), ev.confusion(1, 1));
  std::printf("latent silhouette %.3f\n", silhouette(latent.mu, latent.labels));
  return 0;
}
