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

#include "fpsearch/service.h"

#include <filesystem>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fpsearch/error.h"

namespace fpsearch {

using nlohmann::json;

namespace {

// Error details can echo client bytes; replace invalid UTF-8 rather than throw.
HttpReply Reply(int status, const json& body) {
  return {status, body.dump(-1, ' ', false, json::error_handler_t::replace)};
}

HttpReply ErrorReply(int status, std::string_view error, std::string_view detail) {
  return Reply(status, {{"error", error}, {"detail", detail}});
}

json BoxJson(const Box& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

json SymbolNames(const Taxonomy& tax, std::span<const SymbolId> ids) {
  json out = json::array();
  for (SymbolId s : ids) out.push_back(tax.SymbolName(s));
  return out;
}

json ItemJson(const Taxonomy& tax, const ItemRecord& item) {
  return {{"item_id", item.item_id},
          {"category", tax.SymbolName(item.category)},
          {"attributes", SymbolNames(tax, item.attributes)},
          {"roi", BoxJson(item.roi)},
          {"meta_text", item.meta_text}};
}

uint32_t BoxField(const json& roi, const char* key) {
  const auto& v = roi.at(key);
  FPS_CHECK_ARG(v.is_number_integer(), std::string("roi.") + key + " must be an integer");
  const auto x = v.get<int64_t>();
  FPS_CHECK_ARG(x >= 0 && x <= int64_t{UINT32_MAX},
                std::string("roi.") + key + " out of range");
  return static_cast<uint32_t>(x);
}

// Runs a handler body, mapping exceptions onto status codes.
template <typename Fn>
HttpReply Guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.IsClientFault()) {
      return ErrorReply(e.code() == ErrorCode::kNotFound ? 404 : 400,
                        ErrorCodeName(e.code()), e.what());
    }
    return ErrorReply(500, ErrorCodeName(e.code()), e.what());
  } catch (const json::exception& e) {
    return ErrorReply(400, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    return ErrorReply(500, "internal", e.what());
  }
}

}  // namespace

QueryRequest ParseSearchRequest(std::string_view body, size_t default_k,
                                DistanceWeights default_weights) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    Throw(ErrorCode::kInvalidArgument, std::string("body is not valid JSON: ") + e.what());
  }
  FPS_CHECK_ARG(j.is_object(), "body must be a JSON object");

  QueryRequest r;
  r.k = default_k;
  r.weights = default_weights;

  FPS_CHECK_ARG(j.contains("option") && j["option"].is_number_integer(),
                "field 'option' (1, 2 or 3) is required");
  const auto option = j["option"].get<int64_t>();
  FPS_CHECK_ARG(option >= 1 && option <= 3, "option must be 1, 2 or 3");
  r.option = static_cast<QueryOption>(option);

  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    FPS_CHECK_ARG(j[key].is_string(), std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
  };

  if (auto b64 = opt_string("feature_b64")) r.feature = DecodeFeature(Base64Decode(*b64));
  if (auto b64 = opt_string("image_b64")) r.image = DecodePpm(Base64Decode(*b64));
  r.guided_category = opt_string("guided_category");
  if (auto id = opt_string("image_id")) r.image_id = *id;

  if (j.contains("roi") && !j["roi"].is_null()) {
    const auto& roi = j["roi"];
    FPS_CHECK_ARG(roi.is_object(), "field 'roi' must be an object");
    r.roi = Box{BoxField(roi, "x"), BoxField(roi, "y"), BoxField(roi, "w"),
                BoxField(roi, "h")};
  }
  if (j.contains("k") && !j["k"].is_null()) {
    FPS_CHECK_ARG(j["k"].is_number_integer() && j["k"].get<int64_t>() >= 1,
                  "field 'k' must be a positive integer");
    r.k = static_cast<size_t>(j["k"].get<int64_t>());
  }
  if (j.contains("appearance_weight") && !j["appearance_weight"].is_null()) {
    FPS_CHECK_ARG(j["appearance_weight"].is_number(),
                  "field 'appearance_weight' must be a number");
    r.weights.appearance = j["appearance_weight"].get<double>();
  }
  ValidateRequest(r);
  return r;
}

SearchService::SearchService(ServingState state, size_t default_k,
                             DistanceWeights default_weights)
    : state_(std::make_shared<const ServingState>(std::move(state))),
      default_k_(default_k),
      default_weights_(default_weights),
      server_(std::make_unique<httplib::Server>()) {
  FPS_CHECK_ARG(state_->index && state_->models.model && state_->models.taxonomy,
                "serving state is incomplete");
  InstallRoutes();
}

SearchService::~SearchService() { Stop(); }

std::unique_ptr<SearchService> SearchService::FromConfig(const ServiceConfig& config) {
  FPS_CHECK_ARG(config.port >= 0 && config.port <= 65535, "port out of range");
  ServingState state;
  auto taxonomy = std::make_shared<const Taxonomy>(Taxonomy::Load(config.taxonomy_path));
  taxonomy->RequireValid();
  state.models.taxonomy = taxonomy;
  state.models.model = std::make_shared<const SeqModelParams>(
      LoadCheckpoint(config.checkpoint_path, *taxonomy));
  if (!config.detector_fixture_path.empty()) {
    state.models.detector = std::make_shared<const FixtureDetector>(
        FixtureDetector::Load(config.detector_fixture_path));
  }
  if (!config.keywords_path.empty()) {
    state.keywords = KeywordTable::Load(config.keywords_path);
    state.keywords.CheckAgainst(*taxonomy);
  }
  state.index = std::make_shared<const InvertedIndex>(
      InvertedIndex::Load(config.index_path, taxonomy));
  return std::make_unique<SearchService>(
      std::move(state), config.default_k,
      DistanceWeights{config.default_appearance_weight});
}

std::shared_ptr<const ServingState> SearchService::state() const {
  std::shared_lock lock(state_mu_);
  return state_;
}

HttpReply SearchService::HandleHealth() const {
  auto s = state();
  return Reply(200, {{"status", "ok"}, {"items", s->index->size()}});
}

HttpReply SearchService::HandleTaxonomy() const {
  auto s = state();
  const Taxonomy& tax = *s->models.taxonomy;
  json doc = json::parse(tax.ToJson());
  doc["eos"] = kEosSymbol;
  doc["hash"] = ToHex(tax.content_hash());
  return Reply(200, doc);
}

HttpReply SearchService::HandleItem(std::string_view item_id) const {
  return Guarded([&] {
    auto s = state();
    const ItemRecord* item = s->index->Find(item_id);
    if (!item) {
      return ErrorReply(404, "not_found", "item '" + std::string(item_id) + "' not indexed");
    }
    return Reply(200, ItemJson(*s->models.taxonomy, *item));
  });
}

HttpReply SearchService::HandleSearch(std::string_view body) const {
  return Guarded([&] {
    QueryRequest request = ParseSearchRequest(body, default_k_, default_weights_);
    auto s = state();
    const Taxonomy& tax = *s->models.taxonomy;
    QueryResult result = RunQuery(request, s->models, *s->index);

    json hits = json::array();
    for (const auto& h : result.hits) {
      const ItemRecord& item = *s->index->Find(h.item_id);
      hits.push_back({{"item_id", h.item_id},
                      {"distance", h.distance},
                      {"match_count", h.match_count},
                      {"category", tax.SymbolName(item.category)},
                      {"attributes", SymbolNames(tax, item.attributes)},
                      {"roi", BoxJson(item.roi)}});
    }
    json out = {{"option", static_cast<int>(request.option)},
                {"category", tax.SymbolName(result.category)},
                {"sequence", SymbolNames(tax, result.sequence.symbols)},
                {"sequence_probabilities", result.sequence.probabilities},
                {"results", hits}};
    out["roi"] = result.roi ? BoxJson(*result.roi) : json(nullptr);
    return Reply(200, out);
  });
}

HttpReply SearchService::HandleReindex(std::string_view body) {
  return Guarded([&] {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      Throw(ErrorCode::kInvalidArgument, std::string("body is not valid JSON: ") + e.what());
    }
    FPS_CHECK_ARG(j.is_object() && j.contains("manifest_path") &&
                      j["manifest_path"].is_string(),
                  "field 'manifest_path' is required");
    const std::string manifest = j["manifest_path"].get<std::string>();
    FPS_CHECK_ARG(std::filesystem::is_regular_file(manifest),
                  "manifest '" + manifest + "' does not exist");
    std::lock_guard writer(reindex_mu_);
    auto current = state();
    auto entries = LoadManifest(manifest);
    auto fresh = std::make_shared<InvertedIndex>(current->models.taxonomy,
                                                 current->index->config());
    auto report = IngestManifest(entries, current->keywords, current->models, *fresh);

    auto next = std::make_shared<ServingState>(*current);
    next->index = std::move(fresh);
    {
      std::unique_lock lock(state_mu_);
      state_ = std::move(next);
    }
    json rejected = json::array();
    for (const auto& [id, why] : report.rejected) {
      rejected.push_back({{"item_id", id}, {"reason", why}});
    }
    return Reply(200, {{"items", report.inserted}, {"rejected", rejected}});
  });
}

void SearchService::InstallRoutes() {
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  server_->set_payload_max_length(64u << 20);
  server_->Get("/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, HandleHealth());
  });
  server_->Get("/taxonomy", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, HandleTaxonomy());
  });
  server_->Get(R"(/items/([^/]+))",
               [this, send](const httplib::Request& req, httplib::Response& res) {
                 send(res, HandleItem(req.matches[1].str()));
               });
  server_->Post("/search", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, HandleSearch(req.body));
  });
  server_->Post("/admin/reindex",
                [this, send](const httplib::Request& req, httplib::Response& res) {
                  send(res, HandleReindex(req.body));
                });
  server_->set_exception_handler(
      [send](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        send(res, ErrorReply(500, "internal", "unhandled exception"));
      });
}

int SearchService::BindToAnyPort(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool SearchService::Bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool SearchService::ListenAfterBind() { return server_->listen_after_bind(); }

void SearchService::WaitUntilReady() const { server_->wait_until_ready(); }

void SearchService::Stop() {
  if (server_) server_->stop();
}

}  // namespace fpsearch
