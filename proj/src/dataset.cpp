// SPDX-License-Identifier: Apache-2.0
#include "trajkit/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <omp.h>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"
#include "trajkit/prompts.hpp"

namespace trajkit {

using nlohmann::json;

namespace {

// Unbiased draw in [0, bound) by rejection, so the sequence is identical
// across standard libraries (uniform_int_distribution is not).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

std::vector<HistoryEntry> trunk_history(const TrajTree& tree, int k) {
  std::vector<HistoryEntry> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto& h = tree.trunk[static_cast<std::size_t>(i)].human;
    out.push_back({h.thought, h.action});
  }
  return out;
}

std::string target_of(const DecisionNode& n) { return render_decision(n.thought, n.action); }

}  // namespace

std::string TrainingInstance::user_text() const { return prompts::scaffold_user(task, history_text); }

BoostSelection BoostSelection::from_scaling_factor(int s_prime, std::uint64_t seed) {
  if (s_prime < 1) throw PreconditionError("scaling factor must be >= 1");
  return BoostSelection{s_prime - 1, seed};
}

int estimate_tokens(std::string_view text) { return static_cast<int>((text.size() + 3) / 4); }

std::string build_history_text(const TrajTree& tree, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > tree.trunk.size()) {
    throw PreconditionError("history index " + std::to_string(k) + " out of range");
  }
  const auto entries = trunk_history(tree, k);
  return render_history(entries);
}

std::vector<std::size_t> leaf_order(const TrajTree& tree, int k, std::uint64_t seed) {
  const auto& leaves = tree.trunk.at(static_cast<std::size_t>(k)).leaves;
  std::vector<std::size_t> perm(leaves.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(combine_seed(combine_seed(seed, stable_hash(tree.trajectory_id)), static_cast<std::uint64_t>(k)));
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::vector<TrainingInstance> flatten(const TrajTree& tree, const BoostSelection& sel, const FlattenOptions& options) {
  if (sel.s < 0) throw PreconditionError("selection size s must be >= 0");
  std::vector<TrainingInstance> out;
  const std::string system(prompts::scaffold_system());
  const int system_tokens = estimate_tokens(system);

  for (std::size_t k = 0; k < tree.trunk.size(); ++k) {
    const auto& step = tree.trunk[k];
    const int ki = static_cast<int>(k);

    std::vector<const DecisionNode*> chosen{&step.human};
    if (sel.s > 0 && !step.leaves.empty()) {
      auto perm = leaf_order(tree, ki, sel.seed);
      perm.resize(std::min<std::size_t>(perm.size(), static_cast<std::size_t>(sel.s)));
      std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        return step.leaves[a].sample_index.value_or(0) < step.leaves[b].sample_index.value_or(0);
      });
      for (auto idx : perm) chosen.push_back(&step.leaves[idx]);
    }

    std::vector<std::string> targets;
    int target_tokens = 0;
    for (const auto* node : chosen) {
      targets.push_back(target_of(*node));
      target_tokens = std::max(target_tokens, estimate_tokens(targets.back()));
    }

    // Every instance of a step shares one history, sized for the longest target.
    auto entries = trunk_history(tree, ki);
    std::size_t dropped = 0;
    std::string history = render_history(entries);
    if (options.context_token_cap > 0) {
      auto cost = [&](const std::string& h) {
        return system_tokens + estimate_tokens(prompts::scaffold_user(tree.task, h)) + target_tokens +
               options.image_tokens;
      };
      while (dropped < entries.size() && cost(history) > options.context_token_cap) {
        ++dropped;
        const std::span<const HistoryEntry> rest(entries.data() + dropped, entries.size() - dropped);
        history = render_history(rest, static_cast<int>(dropped) + 1);
      }
    }

    for (std::size_t i = 0; i < chosen.size(); ++i) {
      TrainingInstance inst;
      inst.system_text = system;
      inst.task = tree.task;
      inst.history_text = history;
      inst.image_ref = step.snapshot.observation.screenshot_ref;
      inst.target_text = std::move(targets[i]);
      inst.provenance = {tree.trajectory_id, ki, chosen[i]->source, chosen[i]->sample_index};
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<TrainingInstance> flatten_corpus_serial(std::span<const TrajTree> trees, const BoostSelection& sel,
                                                    const FlattenOptions& options) {
  std::vector<TrainingInstance> out;
  for (const auto& t : trees) {
    auto part = flatten(t, sel, options);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<TrainingInstance> flatten_corpus(std::span<const TrajTree> trees, const BoostSelection& sel,
                                             const FlattenOptions& options) {
  const auto n = static_cast<std::ptrdiff_t>(trees.size());
  std::vector<std::vector<TrainingInstance>> parts(trees.size());
  std::vector<std::string> errors(trees.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      parts[u] = flatten(trees[u], sel, options);
    } catch (const std::exception& e) {
      errors[u] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw PreconditionError("flatten " + trees[i].trajectory_id + ": " + errors[i]);
  }
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<TrainingInstance> out;
  out.reserve(total);
  for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
  return out;
}

DatasetFormat dataset_format_from_name(std::string_view name) {
  const auto lower = to_lower(name);
  if (lower == "messages") return DatasetFormat::Messages;
  if (lower == "sharegpt") return DatasetFormat::ShareGpt;
  throw ConfigError("unknown dataset format '" + std::string(name) + "' (expected messages or sharegpt)");
}

std::string_view dataset_format_name(DatasetFormat f) {
  return f == DatasetFormat::Messages ? "messages" : "sharegpt";
}

json DatasetManifest::to_json() const {
  return {{"count", count},     {"human", human},   {"synthesized", synthesized},
          {"seed", seed},       {"s", s},           {"s_prime", s_prime},
          {"format", format},   {"config_hash", config_hash}, {"content_sha256", content_sha256}};
}

json instance_to_json(const TrainingInstance& inst, DatasetFormat format) {
  json prov = {{"trajectory_id", inst.provenance.trajectory_id},
               {"step_index", inst.provenance.step_index},
               {"source", std::string(node_source_name(inst.provenance.source))}};
  if (inst.provenance.sample_index) prov["sample_index"] = *inst.provenance.sample_index;
  const auto user = inst.user_text();
  if (format == DatasetFormat::Messages) {
    json user_content = json::array({json{{"type", "image"}, {"image", inst.image_ref}},
                                     json{{"type", "text"}, {"text", user}}});
    return {{"messages", json::array({json{{"role", "system"}, {"content", inst.system_text}},
                                      json{{"role", "user"}, {"content", user_content}},
                                      json{{"role", "assistant"}, {"content", inst.target_text}}})},
            {"provenance", prov}};
  }
  return {{"system", inst.system_text},
          {"conversations", json::array({json{{"from", "human"}, {"value", "<image>" + user}},
                                         json{{"from", "gpt"}, {"value", inst.target_text}}})},
          {"images", json::array({inst.image_ref})},
          {"provenance", prov}};
}

DatasetManifest export_dataset(std::span<const TrainingInstance> instances, std::ostream& out,
                               const ExportOptions& options) {
  DatasetManifest m;
  m.seed = options.selection.seed;
  m.s = options.selection.s;
  m.s_prime = options.selection.s_prime();
  m.format = std::string(dataset_format_name(options.format));
  const json config = {{"format", m.format},
                       {"seed", m.seed},
                       {"s", m.s},
                       {"context_token_cap", options.flatten.context_token_cap},
                       {"image_tokens", options.flatten.image_tokens}};
  m.config_hash = sha256_hex(config.dump());

  std::string body;
  for (const auto& inst : instances) {
    if (options.image_exists && !options.image_exists(inst.image_ref)) {
      throw DanglingImageRef(inst.provenance.trajectory_id, inst.provenance.step_index, inst.image_ref);
    }
    body += instance_to_json(inst, options.format).dump();
    body += '\n';
    ++m.count;
    if (inst.provenance.source == NodeSource::Human) {
      ++m.human;
    } else {
      ++m.synthesized;
    }
  }
  m.content_sha256 = sha256_hex(body);
  out << body;
  if (!out) throw IoError("failed writing dataset");
  return m;
}

std::string export_dataset_markdown(const DatasetManifest& manifest, std::span<const TrainingInstance> instances,
                                    std::size_t preview) {
  std::ostringstream md;
  md << "# Dataset\n\n";
  md << "| field | value |\n|---|---|\n";
  md << "| count | " << manifest.count << " |\n";
  md << "| human | " << manifest.human << " |\n";
  md << "| synthesized | " << manifest.synthesized << " |\n";
  md << "| s' | " << manifest.s_prime << " |\n";
  md << "| seed | " << manifest.seed << " |\n";
  md << "| format | " << manifest.format << " |\n\n";
  for (std::size_t i = 0; i < std::min(preview, instances.size()); ++i) {
    const auto& inst = instances[i];
    md << "## " << inst.provenance.trajectory_id << " step " << inst.provenance.step_index << " ("
       << node_source_name(inst.provenance.source) << ")\n\n";
    md << "Image: `" << inst.image_ref << "`\n\n";
    md << "```\n" << inst.user_text() << "\n```\n\n";
    md << "```\n" << inst.target_text << "\n```\n\n";
  }
  return md.str();
}

}  // namespace trajkit
