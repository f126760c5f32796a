// Copyright 2026 The fpsearch Authors.
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

// Writes the deterministic synthetic demo corpus: images, features,
// manifest, detector fixture, ground truth and sequence dataset.

#include <iostream>

#include <CLI11.hpp>

#include "fpsearch/error.h"
#include "fpsearch/synthetic.h"
#include "fpsearch/taxonomy.h"

int main(int argc, char** argv) {
  CLI::App app{"fpsearch_make_fixture: synthetic demo corpus"};
  std::string taxonomy_path, out;
  fpsearch::synthetic::CatalogueOptions opts;
  uint64_t detection_seed = 5;
  app.add_option("--taxonomy", taxonomy_path)->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--items", opts.num_items)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", opts.seed)->capture_default_str();
  app.add_option("--image-size", opts.image_size)->check(CLI::Range(40u, 4096u))
      ->capture_default_str();
  app.add_option("--model-dim", opts.model_dim)->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--dense-dim", opts.dense_dim)->check(CLI::PositiveNumber)
      ->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto taxonomy = fpsearch::Taxonomy::Load(taxonomy_path);
    taxonomy.RequireValid();
    const auto items = fpsearch::synthetic::MakeCatalogue(taxonomy, opts);
    const auto dets = fpsearch::synthetic::MakeDetections(taxonomy, items, detection_seed);
    fpsearch::synthetic::WriteCatalogue(taxonomy, items, dets, out, opts.model_dim);
    std::cout << "wrote " << items.size() << " items to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
