#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tgpo/trajectory.hpp"
#include "tgpo/url.hpp"

namespace tgpo {

struct Verdict {
  bool effective = false;
  bool format_valid = false;
};

/// Judges whether an action changed the interface and whether its raw form is
/// valid engine syntax. Implementations signal failure with ErrorKind::verifier_failure.
class EffectVerifier {
 public:
  virtual ~EffectVerifier() = default;
  virtual Verdict judge(const StateObservation& before, const Action& action,
                        const StateObservation& after) const = 0;
};

/// Raw action grammar understood by the reference verifier:
///
///   action := kind '(' [ arg [ ',' arg ] ] ')'
///   arg    := '"' ( [^"\\] | '\\' any )* '"' | bare text without ',' ')' '"'
///
/// surrounded by optional whitespace. click and navigate need a target; type
/// needs a target and a value.
struct ParsedRawAction {
  std::string kind;
  std::optional<std::string> target;
  std::optional<std::string> value;
};

std::optional<ParsedRawAction> parse_raw_action(std::string_view raw);

/// The raw string parses and agrees with the structured kind.
bool raw_action_well_formed(const Action& action);

/// Effective iff the observed state changed: normalized URL, screenshot hash or DOM digest.
class ReferenceVerifier final : public EffectVerifier {
 public:
  explicit ReferenceVerifier(UrlPolicy policy = {}) : policy_(std::move(policy)) {}

  Verdict judge(const StateObservation& before, const Action& action,
                const StateObservation& after) const override;

 private:
  UrlPolicy policy_;
};

/// Annotated flags win; the verifier is consulted only for the missing ones.
Verdict resolve_flags(const Trajectory& trajectory, std::size_t step, const EffectVerifier& verifier);

/// Fills every missing effective/format_valid flag in place.
void annotate(Trajectory& trajectory, const EffectVerifier& verifier);
void annotate(Corpus& corpus, const EffectVerifier& verifier);

}  // namespace tgpo
