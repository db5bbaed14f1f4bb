#include "tgpo/verifier.hpp"

#include <cctype>
#include <vector>

#include "tgpo/errors.hpp"

namespace tgpo {

namespace {

class RawActionParser {
 public:
  explicit RawActionParser(std::string_view text) : text_(text) {}

  std::optional<ParsedRawAction> parse() {
    ParsedRawAction out;
    skip_space();
    while (pos_ < text_.size() && (std::isalnum(uc(text_[pos_])) != 0 || text_[pos_] == '_')) out.kind += text_[pos_++];
    if (out.kind.empty()) return std::nullopt;
    skip_space();
    if (!consume('(')) return std::nullopt;
    std::vector<std::string> args;
    skip_space();
    if (!peek(')')) {
      for (;;) {
        auto arg = argument();
        if (!arg) return std::nullopt;
        args.push_back(std::move(*arg));
        skip_space();
        if (!consume(',')) break;
        skip_space();
      }
    }
    if (!consume(')')) return std::nullopt;
    skip_space();
    if (pos_ != text_.size() || args.size() > 2) return std::nullopt;
    if (!args.empty()) out.target = std::move(args[0]);
    if (args.size() > 1) out.value = std::move(args[1]);
    return out;
  }

 private:
  static unsigned char uc(char c) { return static_cast<unsigned char>(c); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(uc(text_[pos_])) != 0) ++pos_;
  }
  bool peek(char c) const { return pos_ < text_.size() && text_[pos_] == c; }
  bool consume(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }

  std::optional<std::string> argument() {
    std::string arg;
    if (consume('"')) {
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\') {
          if (++pos_ == text_.size()) return std::nullopt;
        }
        arg += text_[pos_++];
      }
      if (!consume('"')) return std::nullopt;
      return arg;
    }
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ')' && text_[pos_] != '"') arg += text_[pos_++];
    arg = collapse_whitespace(arg);
    if (arg.empty()) return std::nullopt;
    return arg;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool non_blank(const std::optional<std::string>& s) { return s && !collapse_whitespace(*s).empty(); }

}  // namespace

std::optional<ParsedRawAction> parse_raw_action(std::string_view raw) { return RawActionParser(raw).parse(); }

bool raw_action_well_formed(const Action& action) {
  const auto parsed = parse_raw_action(action.raw);
  if (!parsed) return false;
  const auto kind = parse_action_kind(parsed->kind);
  if (action.kind == ActionKind::other) {
    // Free-form kinds must not impersonate a known one.
    if (kind && *kind != ActionKind::other) return false;
  } else if (kind != action.kind) {
    return false;
  }
  switch (action.kind) {
    case ActionKind::click:
    case ActionKind::navigate: return non_blank(parsed->target);
    case ActionKind::type: return non_blank(parsed->target) && non_blank(parsed->value);
    default: return true;
  }
}

Verdict ReferenceVerifier::judge(const StateObservation& before, const Action& action,
                                 const StateObservation& after) const {
  Verdict verdict;
  try {
    verdict.effective = normalize_url(before.url, policy_) != normalize_url(after.url, policy_) ||
                        before.screenshot_hash != after.screenshot_hash || before.dom_digest != after.dom_digest;
  } catch (const Error& e) {
    fail(ErrorKind::verifier_failure, e.what());
  }
  verdict.format_valid = raw_action_well_formed(action);
  return verdict;
}

Verdict resolve_flags(const Trajectory& trajectory, std::size_t step, const EffectVerifier& verifier) {
  const Step& s = trajectory.steps.at(step);
  if (s.effective && s.format_valid) return {*s.effective, *s.format_valid};
  const Verdict judged = verifier.judge(s.state, s.action, trajectory.state_at(step + 1));
  return {s.effective.value_or(judged.effective), s.format_valid.value_or(judged.format_valid)};
}

void annotate(Trajectory& trajectory, const EffectVerifier& verifier) {
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const Verdict verdict = resolve_flags(trajectory, t, verifier);
    trajectory.steps[t].effective = verdict.effective;
    trajectory.steps[t].format_valid = verdict.format_valid;
  }
}

void annotate(Corpus& corpus, const EffectVerifier& verifier) {
  for (TaskGroup& group : corpus)
    for (Trajectory& trajectory : group.trajectories) annotate(trajectory, verifier);
}

}  // namespace tgpo
