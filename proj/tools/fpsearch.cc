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

// fpsearch: offline indexing, evaluation, benchmarking and the search daemon.

#include <csignal>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fpsearch/attrseq.h"
#include "fpsearch/error.h"
#include "fpsearch/index.h"
#include "fpsearch/kernels.h"
#include "fpsearch/pipeline.h"
#include "fpsearch/random.h"
#include "fpsearch/roi.h"
#include "fpsearch/service.h"
#include "fpsearch/taxonomy.h"

namespace {

using namespace fpsearch;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string taxonomy;
  std::string manifest;
  std::string index;
  std::string checkpoint;
  std::string keywords;
  std::string detector_fixture;
  size_t k = 10;
  double appearance_weight = 0.7;
  uint64_t seed = 1;
  bool json = false;
};

void PrintJson(const json& doc) { std::cout << doc.dump(2) << "\n"; }

std::shared_ptr<const Taxonomy> LoadTaxonomy(const std::string& path) {
  auto t = std::make_shared<const Taxonomy>(Taxonomy::Load(path));
  t->RequireValid();
  return t;
}

PipelineModels LoadModels(const Common& c, std::shared_ptr<const Taxonomy> taxonomy) {
  PipelineModels m;
  m.model = std::make_shared<const SeqModelParams>(LoadCheckpoint(c.checkpoint, *taxonomy));
  m.taxonomy = std::move(taxonomy);
  if (!c.detector_fixture.empty()) {
    m.detector = std::make_shared<const FixtureDetector>(FixtureDetector::Load(c.detector_fixture));
  }
  return m;
}

json Names(const Taxonomy& t, std::span<const SymbolId> ids) {
  json out = json::array();
  for (SymbolId s : ids) out.push_back(t.SymbolName(s));
  return out;
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- taxonomy-validate ----------------------------------------------------

int TaxonomyValidate(const Common& c) {
  const Taxonomy t = Taxonomy::Load(c.taxonomy);
  const auto violations = t.Validate();
  if (c.json) {
    PrintJson({{"valid", violations.empty()},
               {"violations", violations},
               {"categories", t.num_categories()},
               {"attributes", t.num_attributes()},
               {"vocab_size", t.vocab_size()},
               {"hash", ToHex(t.content_hash())}});
  } else if (violations.empty()) {
    std::cout << "OK\n";
  } else {
    for (const auto& v : violations) std::cout << "violation: " << v << "\n";
  }
  return violations.empty() ? kExitOk : kExitFailure;
}

// ---- ingest ---------------------------------------------------------------

int Ingest(const Common& c, uint32_t code_bits) {
  auto taxonomy = LoadTaxonomy(c.taxonomy);
  const PipelineModels models = LoadModels(c, taxonomy);
  const KeywordTable keywords = KeywordTable::Load(c.keywords);
  keywords.CheckAgainst(*taxonomy);
  InvertedIndex index(taxonomy, IndexConfig{code_bits, {}});
  const auto start = std::chrono::steady_clock::now();
  const auto report = IngestManifest(LoadManifest(c.manifest), keywords, models, index);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  index.Save(c.index);

  if (c.json) {
    json rejected = json::array();
    for (const auto& [id, why] : report.rejected) {
      rejected.push_back({{"item_id", id}, {"reason", why}});
    }
    PrintJson({{"inserted", report.inserted}, {"rejected", rejected}, {"index", c.index}});
  } else {
    std::cout << "indexed " << report.inserted << " items in " << Fixed(secs, 2) << " s -> "
              << c.index << "\n";
    for (const auto& [id, why] : report.rejected) {
      std::cout << "rejected " << id << ": " << why << "\n";
    }
  }
  return kExitOk;
}

// ---- search ---------------------------------------------------------------

struct SearchArgs {
  int option = 1;
  std::string feature;
  std::string image;
  std::string image_id;
  std::string guided_category;
  std::vector<uint32_t> roi;
};

int Search(const Common& c, const SearchArgs& a) {
  auto taxonomy = LoadTaxonomy(c.taxonomy);
  const PipelineModels models = LoadModels(c, taxonomy);
  const InvertedIndex index = InvertedIndex::Load(c.index, taxonomy);

  QueryRequest r;
  r.option = static_cast<QueryOption>(a.option);
  if (!a.feature.empty()) r.feature = ReadFeature(a.feature);
  if (!a.image.empty()) r.image = ReadPpm(a.image);
  if (!a.guided_category.empty()) r.guided_category = a.guided_category;
  if (!a.roi.empty()) r.roi = Box{a.roi[0], a.roi[1], a.roi[2], a.roi[3]};
  r.image_id = a.image_id;
  r.k = c.k;
  r.weights.appearance = c.appearance_weight;
  const QueryResult result = RunQuery(r, models, index);

  if (c.json) {
    json hits = json::array();
    for (const auto& h : result.hits) {
      const ItemRecord& item = *index.Find(h.item_id);
      hits.push_back({{"item_id", h.item_id},
                      {"distance", h.distance},
                      {"match_count", h.match_count},
                      {"category", taxonomy->SymbolName(item.category)},
                      {"attributes", Names(*taxonomy, item.attributes)}});
    }
    json doc = {{"option", a.option},
                {"category", taxonomy->SymbolName(result.category)},
                {"sequence", Names(*taxonomy, result.sequence.symbols)},
                {"results", hits}};
    doc["roi"] = result.roi ? json{{"x", result.roi->x},
                                   {"y", result.roi->y},
                                   {"w", result.roi->w},
                                   {"h", result.roi->h}}
                            : json(nullptr);
    PrintJson(doc);
    return kExitOk;
  }
  std::cout << "category: " << taxonomy->SymbolName(result.category) << "\nsequence:";
  for (SymbolId s : result.sequence.symbols) std::cout << " " << taxonomy->SymbolName(s);
  std::cout << "\n";
  for (size_t i = 0; i < result.hits.size(); ++i) {
    const auto& h = result.hits[i];
    std::cout << i + 1 << "\t" << h.item_id << "\tmatch=" << h.match_count
              << "\tdistance=" << Fixed(h.distance, 4) << "\n";
  }
  return kExitOk;
}

// ---- serve ----------------------------------------------------------------

int Serve(const Common& c, const std::string& host, int port) {
  ServiceConfig cfg;
  cfg.host = host;
  cfg.port = port;
  cfg.taxonomy_path = c.taxonomy;
  cfg.index_path = c.index;
  cfg.checkpoint_path = c.checkpoint;
  cfg.detector_fixture_path = c.detector_fixture;
  cfg.keywords_path = c.keywords;
  cfg.default_k = c.k;
  cfg.default_appearance_weight = c.appearance_weight;

  // Block the shutdown signals before any thread exists so only the waiter
  // below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto service = SearchService::FromConfig(cfg);
  if (!service->Bind(host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return kExitFailure;
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service->Stop();
  });
  std::cerr << "serving " << service->state()->index->size() << " items on " << host << ":"
            << port << "\n";
  service->ListenAfterBind();
  // Stopped by something other than a signal: wake the waiter.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitOk;
}

// ---- train-seq / eval-seq -------------------------------------------------

struct TrainArgs {
  size_t epochs = 500;
  size_t patience = 20;
  double learning_rate = 0.05;
  size_t batch_size = 1;
  uint32_t embed = 32;
  uint32_t hidden = 64;
};

int TrainSeq(const Common& c, const TrainArgs& a) {
  auto taxonomy = LoadTaxonomy(c.taxonomy);
  const SequenceDataset data = LoadSequenceDataset(c.manifest, *taxonomy);
  FPS_CHECK_ARG(!data.train.empty(), "dataset has no training examples");
  const auto feature_dim = static_cast<uint32_t>(data.train[0].feature.size());
  TrainConfig cfg;
  cfg.max_epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.learning_rate = a.learning_rate;
  cfg.batch_size = a.batch_size;
  cfg.seed = c.seed;
  const auto dims = DimsForTaxonomy(*taxonomy, feature_dim, a.embed, a.hidden);
  const TrainResult r =
      Train(SeqModelParams::Random(dims, c.seed), data.train, data.validation, cfg);
  SaveCheckpoint(r.params, *taxonomy, c.checkpoint);

  if (c.json) {
    json history = json::array();
    for (const auto& e : r.history) {
      history.push_back({{"epoch", e.epoch},
                         {"train_nll", e.train_nll},
                         {"validation_nll", e.validation_nll}});
    }
    PrintJson({{"best_epoch", r.best_epoch},
               {"epochs", r.history.size()},
               {"checkpoint", c.checkpoint},
               {"history", history}});
  } else {
    for (const auto& e : r.history) {
      if (e.epoch == 1 || e.epoch % 25 == 0 || e.epoch == r.history.size()) {
        std::cout << "epoch " << e.epoch << "\ttrain_nll " << Fixed(e.train_nll, 4)
                  << "\tval_nll " << Fixed(e.validation_nll, 4) << "\n";
      }
    }
    std::cout << "best epoch " << r.best_epoch << " -> " << c.checkpoint << "\n";
  }
  return kExitOk;
}

int EvalSeq(const Common& c) {
  auto taxonomy = LoadTaxonomy(c.taxonomy);
  const SeqModelParams params = LoadCheckpoint(c.checkpoint, *taxonomy);
  const SequenceDataset data = LoadSequenceDataset(c.manifest, *taxonomy);
  const std::vector<std::pair<std::string, const std::vector<SeqExample>*>> splits{
      {"train", &data.train}, {"validation", &data.validation}, {"test", &data.test}};

  json rows = json::array();
  if (!c.json) std::cout << "split       precision  recall  NLL\n";
  for (const auto& [name, set] : splits) {
    if (set->empty()) continue;
    const auto pr = EvaluatePr(params, *set);
    rows.push_back({{"split", name},
                    {"items", set->size()},
                    {"precision", pr.precision},
                    {"recall", pr.recall},
                    {"nll", pr.nll}});
    if (!c.json) {
      std::printf("%-11s %9.3f  %6.3f  %.3f\n", name.c_str(), pr.precision, pr.recall, pr.nll);
    }
  }
  if (c.json) PrintJson({{"splits", rows}});
  return kExitOk;
}

// ---- eval-detector --------------------------------------------------------

struct DetectorArgs {
  std::string pred;
  std::string gt;
  std::vector<double> iou{0.5, 0.6, 0.7, 0.8, 0.9};
  bool guided = false;
};

int EvalDetector(const Common& c, const DetectorArgs& a) {
  const DetectionsByImage preds = LoadDetections(a.pred);
  const auto gt = LoadGroundTruth(a.gt);

  std::vector<std::pair<std::string, std::vector<MapRow>>> rows;
  if (a.guided) {
    // Guide each image by its ground-truth category when it is unambiguous.
    std::map<std::string, std::set<std::string>> cats;
    for (const auto& g : gt) cats[g.image_id].insert(g.category);
    DetectionsByImage filtered;
    for (const auto& [image, dets] : preds) {
      auto it = cats.find(image);
      std::optional<std::string> guide;
      if (it != cats.end() && it->second.size() == 1) guide = *it->second.begin();
      filtered[image] = GuidedFilter(dets, guide);
    }
    rows.emplace_back("guided", EvaluateMap(filtered, gt, a.iou));
  }
  rows.emplace_back("non-guided", EvaluateMap(preds, gt, a.iou));

  if (c.json) {
    json out = {{"iou", a.iou}, {"rows", json::array()}};
    for (const auto& [name, table] : rows) {
      json maps = json::array(), per = json::array();
      for (const auto& r : table) {
        maps.push_back(r.map);
        per.push_back(r.per_category_ap);
      }
      out["rows"].push_back({{"name", name}, {"map", maps}, {"per_category_ap", per}});
    }
    PrintJson(out);
    return kExitOk;
  }
  std::printf("%-12s", "IoU");
  for (double t : a.iou) std::printf(" %6.2f", t);
  std::printf("\n");
  for (const auto& [name, table] : rows) {
    std::printf("%-12s", name.c_str());
    for (const auto& r : table) std::printf(" %6.3f", r.map);
    std::printf("\n");
  }
  return kExitOk;
}

// ---- bench-hamming --------------------------------------------------------

int BenchHamming(const Common& c, uint32_t bits, size_t n, int repeats) {
  FPS_CHECK_ARG(bits > 0 && n > 0 && repeats > 0, "bits, n and repeats must be positive");
  Rng rng(c.seed);
  kernels::PackedCodes codes(bits);
  std::vector<uint64_t> words((bits + 63) / 64);
  auto random_code = [&] {
    for (auto& w : words) w = rng.NextU64();
    if (bits % 64) words.back() &= (uint64_t{1} << (bits % 64)) - 1;
    return BinaryCode(bits, words);
  };
  for (size_t i = 0; i < n; ++i) codes.AppendWords(random_code().words());
  const BinaryCode query = random_code();

  std::vector<uint32_t> parallel(n), serial(n);
  auto time_best = [&](auto&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      best = std::min(best,
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  const double t_parallel = time_best([&] { kernels::HammingScan(query, codes, parallel); });
  const double t_serial = time_best([&] { kernels::serial::HammingScan(query, codes, serial); });

  // Oracle spot check: a sample of distances recomputed bit by bit.
  size_t checked = 0, mismatches = 0;
  for (size_t i = 0; i < n; i += std::max<size_t>(1, n / 1000)) {
    uint32_t d = 0;
    const uint64_t* w = codes.Code(i);
    for (size_t b = 0; b < bits; ++b) {
      d += ((w[b / 64] >> (b % 64)) & 1u) != (query.Get(b) ? 1u : 0u);
    }
    mismatches += d != parallel[i];
    ++checked;
  }
  const bool paths_agree = parallel == serial;
  const int threads = kernels::MaxThreads();
  const double rate = static_cast<double>(n) / t_parallel;
  const double rate_serial = static_cast<double>(n) / t_serial;
  const bool ok = mismatches == 0 && paths_agree;

  if (c.json) {
    PrintJson({{"bits", bits},
               {"n", n},
               {"threads", threads},
               {"hardware_popcount", HardwarePopcountAvailable()},
               {"comparisons_per_sec", rate},
               {"comparisons_per_sec_per_core", rate / threads},
               {"serial_portable_comparisons_per_sec", rate_serial},
               {"oracle_checked", checked},
               {"oracle_mismatches", mismatches},
               {"paths_agree", paths_agree}});
  } else {
    std::cout << "bits " << bits << ", n " << n << ", threads " << threads
              << ", hardware popcount " << (HardwarePopcountAvailable() ? "yes" : "no") << "\n"
              << "openmp scan:     " << Fixed(rate / 1e6, 2) << " M comparisons/s ("
              << Fixed(rate / threads / 1e6, 2) << " M/s/core)\n"
              << "serial portable: " << Fixed(rate_serial / 1e6, 2) << " M comparisons/s\n"
              << "oracle spot check: " << checked - mismatches << "/" << checked
              << " agree; scan paths " << (paths_agree ? "agree" : "DISAGREE") << "\n";
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpsearch: attribute-guided fashion product search"};
  app.require_subcommand(1);
  Common c;

  auto add_json = [&](CLI::App* s) {
    s->add_flag("--json", c.json, "Machine-readable output");
    // Shared by every subcommand; only training and benchmarking draw random numbers.
    s->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  };
  auto add_taxonomy = [&](CLI::App* s) {
    s->add_option("--taxonomy", c.taxonomy, "Taxonomy JSON")->required()->check(CLI::ExistingFile);
  };

  auto* validate = app.add_subcommand("taxonomy-validate", "Check a taxonomy file");
  add_taxonomy(validate);
  add_json(validate);

  uint32_t code_bits = kDefaultFeatureDim;
  auto* ingest = app.add_subcommand("ingest", "Build an index snapshot from a corpus manifest");
  add_taxonomy(ingest);
  ingest->add_option("--manifest", c.manifest, "Corpus manifest (JSON Lines)")
      ->required()->check(CLI::ExistingFile);
  ingest->add_option("--checkpoint", c.checkpoint, "Sequence model checkpoint")
      ->required()->check(CLI::ExistingFile);
  ingest->add_option("--keywords", c.keywords, "Keyword table JSON")
      ->required()->check(CLI::ExistingFile);
  ingest->add_option("--detector-fixture", c.detector_fixture, "Detections (JSON Lines)")
      ->check(CLI::ExistingFile);
  ingest->add_option("--index", c.index, "Output snapshot path")->required();
  ingest->add_option("--bits", code_bits, "Dense feature / code length")->capture_default_str();
  add_json(ingest);

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "Run one query against a snapshot");
  add_taxonomy(search);
  search->add_option("--index", c.index, "Index snapshot")->required()->check(CLI::ExistingFile);
  search->add_option("--checkpoint", c.checkpoint, "Sequence model checkpoint")
      ->required()->check(CLI::ExistingFile);
  search->add_option("--detector-fixture", c.detector_fixture, "Detections (JSON Lines)")
      ->check(CLI::ExistingFile);
  search->add_option("--option", sa.option, "1 automatic, 2 guided, 3 user ROI")
      ->check(CLI::Range(1, 3))->capture_default_str();
  search->add_option("--feature", sa.feature, "Query feature (FPSF)")->check(CLI::ExistingFile);
  search->add_option("--image", sa.image, "Query image (binary PPM)")->check(CLI::ExistingFile);
  search->add_option("--image-id", sa.image_id, "Image id for the detector fixture");
  search->add_option("--guided-category", sa.guided_category, "Category for option 2");
  search->add_option("--roi", sa.roi, "x,y,w,h for option 3")->delimiter(',')->expected(4);
  search->add_option("--k", c.k, "Results to return")->check(CLI::PositiveNumber)
      ->capture_default_str();
  search->add_option("--appearance-weight", c.appearance_weight, "Weight of Hamming distance")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  add_json(search);

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP search daemon");
  add_taxonomy(serve);
  serve->add_option("--index", c.index, "Index snapshot")->required()->check(CLI::ExistingFile);
  serve->add_option("--checkpoint", c.checkpoint, "Sequence model checkpoint")
      ->required()->check(CLI::ExistingFile);
  serve->add_option("--detector-fixture", c.detector_fixture, "Detections (JSON Lines)")
      ->check(CLI::ExistingFile);
  serve->add_option("--keywords", c.keywords, "Keyword table (needed for reindex)")
      ->check(CLI::ExistingFile);
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--k", c.k, "Default k")->check(CLI::PositiveNumber)->capture_default_str();
  serve->add_option("--appearance-weight", c.appearance_weight, "Default weight")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  serve->add_option("--seed", c.seed, "Random seed")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train-seq", "Train the attribute sequence model");
  add_taxonomy(train);
  train->add_option("--manifest", c.manifest, "Sequence dataset (JSON Lines)")
      ->required()->check(CLI::ExistingFile);
  train->add_option("--checkpoint", c.checkpoint, "Output checkpoint path")->required();
  train->add_option("--epochs", ta.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--patience", ta.patience)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--lr", ta.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch-size", ta.batch_size)->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--embed", ta.embed)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--hidden", ta.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  add_json(train);

  auto* eval_seq = app.add_subcommand("eval-seq", "Precision / recall / NLL per split");
  add_taxonomy(eval_seq);
  eval_seq->add_option("--manifest", c.manifest, "Sequence dataset (JSON Lines)")
      ->required()->check(CLI::ExistingFile);
  eval_seq->add_option("--checkpoint", c.checkpoint, "Model checkpoint")
      ->required()->check(CLI::ExistingFile);
  add_json(eval_seq);

  DetectorArgs da;
  auto* eval_det = app.add_subcommand("eval-detector", "mAP table over IoU thresholds");
  eval_det->add_option("--pred", da.pred, "Detections (JSON Lines)")
      ->required()->check(CLI::ExistingFile);
  eval_det->add_option("--gt", da.gt, "Ground truth (JSON Lines)")
      ->required()->check(CLI::ExistingFile);
  eval_det->add_option("--iou", da.iou, "Comma-separated thresholds")
      ->delimiter(',')->check(CLI::Range(0.0, 1.0));
  eval_det->add_flag("--guided", da.guided,
                     "Also report mAP with detections filtered to each image's category");
  add_json(eval_det);

  uint32_t bench_bits = 1024;
  size_t bench_n = 100000;
  int bench_repeats = 5;
  auto* bench = app.add_subcommand("bench-hamming", "Hamming scan throughput");
  bench->add_option("--bits", bench_bits)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--n", bench_n)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--repeats", bench_repeats)->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_json(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate) return TaxonomyValidate(c);
    if (*ingest) return Ingest(c, code_bits);
    if (*search) return Search(c, sa);
    if (*serve) return Serve(c, host, port);
    if (*train) return TrainSeq(c, ta);
    if (*eval_seq) return EvalSeq(c);
    if (*eval_det) return EvalDetector(c, da);
    if (*bench) return BenchHamming(c, bench_bits, bench_n, bench_repeats);
  } catch (const fpsearch::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
