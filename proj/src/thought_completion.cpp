// SPDX-License-Identifier: Apache-2.0
#include "trajkit/thought_completion.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"

namespace trajkit {

namespace fs = std::filesystem;
using nlohmann::json;

Image annotate_marks(const Image& screenshot, const Action& action) {
  Image out = screenshot;
  if (const auto* c = std::get_if<actions::Click>(&action)) {
    fill_disc(out, c->x, c->y, kMarkRadius, kMarkColor);
  } else if (const auto* c = std::get_if<actions::RightClick>(&action)) {
    fill_disc(out, c->x, c->y, kMarkRadius, kMarkColor);
  } else if (const auto* c = std::get_if<actions::DoubleClick>(&action)) {
    fill_disc(out, c->x, c->y, kMarkRadius, kMarkColor);
  } else if (const auto* d = std::get_if<actions::Drag>(&action)) {
    fill_disc(out, d->x1, d->y1, kMarkRadius, kMarkColor);
    fill_disc(out, d->x2, d->y2, kMarkRadius, kMarkColor);
    draw_arrow(out, d->x1, d->y1, d->x2, d->y2, 3, kMarkColor);
  }
  return out;
}

Image annotate_marks(const Observation& obs, const Action& action, const ScreenshotLoader& loader) {
  return annotate_marks(loader(obs), action);
}

ChatRequest build_thought_prompt(std::string_view task, std::span<const HistoryEntry> history, const Action& action,
                                 const std::optional<std::string>& element_name,
                                 std::optional<ImagePayload> marked_screenshot, int history_cap) {
  const auto cap = static_cast<size_t>(std::max(0, history_cap));
  const size_t skip = history.size() > cap ? history.size() - cap : 0;
  const auto recent = history.subspan(skip);
  ChatRequest req;
  req.system_text = std::string(prompts::thought_system());
  req.user_text = prompts::thought_user(task, render_history(recent, static_cast<int>(skip) + 1),
                                        render_action(action), element_name);
  if (marked_screenshot) req.images.push_back(std::move(*marked_screenshot));
  req.temperature = 0.3;
  return req;
}

std::string scrub_mark_mentions(std::string_view text) {
  std::string out;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find_first_of(".!?\n", start);
    end = end == std::string_view::npos ? text.size() : end + 1;
    const auto sentence = text.substr(start, end - start);
    if (!prompts::mentions_marks(sentence)) out += sentence;
    start = end;
  }
  return std::string(trim(out));
}

namespace {

std::string fingerprint(const Trajectory& t) {
  std::string s = t.id + "\x1e" + t.task_description;
  for (const auto& step : t.steps) s += "\x1e" + render_action(step.action);
  return sha256_hex(s);
}

struct Checkpoint {
  std::vector<std::string> thoughts;
  std::vector<int> warnings;
};

fs::path checkpoint_path(const fs::path& dir, const std::string& id) { return dir / (id + ".thoughts.json"); }

std::optional<Checkpoint> read_checkpoint(const fs::path& dir, const Trajectory& t) {
  std::ifstream in(checkpoint_path(dir, t.id));
  if (!in) return std::nullopt;
  try {
    const auto j = json::parse(in);
    if (j.value("fingerprint", "") != fingerprint(t)) return std::nullopt;
    Checkpoint cp{j.at("thoughts").get<std::vector<std::string>>(), j.value("warnings", std::vector<int>{})};
    if (cp.thoughts.size() > t.steps.size()) return std::nullopt;
    return cp;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void write_checkpoint(const fs::path& dir, const Trajectory& t, const Checkpoint& cp) {
  fs::create_directories(dir);
  const auto path = checkpoint_path(dir, t.id);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << json{{"id", t.id}, {"fingerprint", fingerprint(t)}, {"thoughts", cp.thoughts}, {"warnings", cp.warnings}}.dump();
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace

Trajectory complete_thoughts(const Trajectory& t, Gateway& gateway, const ThoughtOptions& options) {
  validate_trajectory(t);
  const bool any = std::any_of(t.steps.begin(), t.steps.end(), [](const Step& s) { return s.thought.has_value(); });
  if (!options.force) {
    if (t.has_all_thoughts()) return t;
    if (any) throw PreconditionError("trajectory '" + t.id + "' is partially thought-completed; use force to overwrite");
  }

  Checkpoint cp;
  if (options.checkpoint_dir) {
    if (auto loaded = read_checkpoint(*options.checkpoint_dir, t)) cp = std::move(*loaded);
  }

  std::vector<HistoryEntry> history;
  for (size_t k = 0; k < cp.thoughts.size(); ++k) history.push_back({cp.thoughts[k], t.steps[k].action});

  for (size_t k = cp.thoughts.size(); k < t.steps.size(); ++k) {
    const auto& step = t.steps[k];
    std::optional<ImagePayload> image;
    if (options.loader) {
      image = make_payload(annotate_marks(step.observation, step.action, options.loader),
                           step.observation.screenshot_ref);
    }
    auto req = build_thought_prompt(t.task_description, history, step.action, step.element_name, std::move(image),
                                    options.history_cap);
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;

    std::string thought;
    try {
      thought = std::string(trim(gateway.complete(req)));
      if (prompts::mentions_marks(thought)) {
        auto retry = req;
        retry.user_text += prompts::thought_correction();
        thought = std::string(trim(gateway.complete(retry)));
        if (prompts::mentions_marks(thought)) {
          thought = scrub_mark_mentions(thought);
          cp.warnings.push_back(static_cast<int>(k));
        }
      }
    } catch (const Error& e) {
      if (options.checkpoint_dir) write_checkpoint(*options.checkpoint_dir, t, cp);
      throw StageAborted(t.id, static_cast<int>(cp.thoughts.size()), e.kind() + ": " + e.what());
    }

    cp.thoughts.push_back(thought);
    history.push_back({thought, step.action});
    if (options.checkpoint_dir) write_checkpoint(*options.checkpoint_dir, t, cp);
  }

  Trajectory out = t;
  for (size_t k = 0; k < out.steps.size(); ++k) out.steps[k].thought = cp.thoughts[k];
  if (!cp.warnings.empty()) out.annotator_meta["thought_warnings"] = cp.warnings;
  if (options.checkpoint_dir) fs::remove(checkpoint_path(*options.checkpoint_dir, t.id));
  return out;
}

CorpusRun complete_thoughts_corpus(std::span<const Trajectory> corpus, Gateway& gateway,
                                   const ThoughtOptions& options, int width) {
  std::vector<std::optional<Trajectory>> slots(corpus.size());
  std::vector<std::string> errors(corpus.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < corpus.size();) {
      try {
        slots[i] = complete_thoughts(corpus[i], gateway, options);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int n = std::max(1, std::min<int>(width, static_cast<int>(corpus.size())));
    for (int w = 0; w < n; ++w) pool.emplace_back(worker);
  }
  CorpusRun run;
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (slots[i]) run.completed.push_back(std::move(*slots[i]));
    if (!errors[i].empty()) run.errors.push_back(corpus[i].id + ": " + errors[i]);
  }
  return run;
}

}  // namespace trajkit
