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

#ifndef FPSEARCH_SERVICE_H_
#define FPSEARCH_SERVICE_H_

#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "fpsearch/index.h"
#include "fpsearch/pipeline.h"

namespace httplib {
class Server;
}

namespace fpsearch {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string taxonomy_path;
  std::string index_path;
  std::string checkpoint_path;
  std::string detector_fixture_path;  // optional
  std::string keywords_path;          // optional; needed by reindex
  size_t default_k = 10;
  double default_appearance_weight = 0.7;
};

// Everything a request reads. Published as a whole and never mutated, so a
// request sees either the old or the new index, never a mix.
struct ServingState {
  PipelineModels models;
  KeywordTable keywords;
  std::shared_ptr<const InvertedIndex> index;
};

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

// RESTful front end for the online phase:
//   GET  /health, GET /taxonomy, GET /items/{id}
//   POST /search, POST /admin/reindex
// Handlers are callable directly (tests) or through the embedded server.
class SearchService {
 public:
  SearchService(ServingState state, size_t default_k, DistanceWeights default_weights);
  ~SearchService();

  // Loads taxonomy, snapshot, checkpoint and optional fixtures.
  static std::unique_ptr<SearchService> FromConfig(const ServiceConfig& config);

  HttpReply HandleHealth() const;
  HttpReply HandleTaxonomy() const;
  HttpReply HandleItem(std::string_view item_id) const;
  HttpReply HandleSearch(std::string_view body) const;
  HttpReply HandleReindex(std::string_view body);

  // Returns the bound port, or -1.
  int BindToAnyPort(const std::string& host);
  bool Bind(const std::string& host, int port);
  // Blocks until Stop().
  bool ListenAfterBind();
  void WaitUntilReady() const;
  void Stop();

  std::shared_ptr<const ServingState> state() const;

 private:
  void InstallRoutes();

  mutable std::shared_mutex state_mu_;
  std::shared_ptr<const ServingState> state_;
  std::mutex reindex_mu_;
  size_t default_k_;
  DistanceWeights default_weights_;
  std::unique_ptr<httplib::Server> server_;
};

// Parses a /search body into a request. Throws kInvalidArgument.
QueryRequest ParseSearchRequest(std::string_view body, size_t default_k,
                                DistanceWeights default_weights);

}  // namespace fpsearch

#endif  // FPSEARCH_SERVICE_H_
