#include "advdga/synth.hpp"

#include <unordered_set>

#include "advdga/alphabet.hpp"
#include "advdga/errors.hpp"
#include "advdga/rng.hpp"

namespace advdga {
namespace {

const char* kWords[] = {
    "able",    "acid",    "acre",    "after",   "again",   "agent",
    "agree",   "ahead",   "alarm",   "album",   "alert",   "alpha",
    "amber",   "angle",   "apple",   "april",   "arrow",   "atlas",
    "audio",   "autumn",  "bacon",   "badge",   "baker",   "bamboo",
    "banner",  "basil",   "basket",  "beach",   "beacon",  "bean",
    "bear",    "berry",   "bird",    "bison",   "blade",   "blank",
    "blaze",   "blend",   "block",   "bloom",   "blue",    "board",
    "bolt",    "bonus",   "book",    "booth",   "bound",   "brain",
    "branch",  "brave",   "bread",   "breeze",  "brick",   "bridge",
    "bright",  "brook",   "brush",   "budget",  "butter",  "cabin",
    "cable",   "cactus",  "camera",  "camp",    "candle",  "canoe",
    "canyon",  "carbon",  "cargo",   "carpet",  "castle",  "cedar",
    "chain",   "chair",   "chalk",   "charm",   "chart",   "cheese",
    "cherry",  "chess",   "chief",   "citrus",  "civic",   "claim",
    "clay",    "clear",   "cliff",   "clock",   "cloud",   "clover",
    "coast",   "cobalt",  "coffee",  "comet",   "compass", "copper",
    "coral",   "corner",  "cotton",  "cougar",  "craft",   "crane",
    "cream",   "creek",   "crest",   "cricket", "crisp",   "crown",
    "crystal", "cycle",   "daisy",   "dance",   "dawn",    "delta",
    "denim",   "depot",   "desert",  "design",  "dream",   "drift",
    "drum",    "dusk",    "eagle",   "early",   "earth",   "east",
    "echo",    "edge",    "elder",   "ember",   "empire",  "energy",
    "engine",  "essay",   "estate",  "fable",   "falcon",  "family",
    "fancy",   "farm",    "feather", "fern",    "field",   "finch",
    "fire",    "flag",    "flame",   "flash",   "fleet",   "flint",
    "flora",   "flour",   "focus",   "forest",  "forge",   "fort",
    "fountain","fox",     "frame",   "fresh",   "frost",   "galaxy",
    "garden",  "garlic",  "gate",    "gem",     "giant",   "ginger",
    "glacier", "glade",   "glass",   "globe",   "gold",    "goose",
    "grain",   "grand",   "granite", "grape",   "grass",   "green",
    "grove",   "guide",   "gulf",    "habit",   "harbor",  "harvest",
    "hawk",    "hazel",   "heart",   "heron",   "hill",    "honey",
    "horizon", "house",   "humble",  "hunter",  "iceberg", "index",
    "indigo",  "iron",    "island",  "ivory",   "jade",    "jaguar",
    "jasmine", "jasper",  "jungle",  "juniper", "kayak",   "kernel",
    "kite",    "ladder",  "lagoon",  "lake",    "lantern", "laurel",
    "lava",    "leaf",    "ledger",  "lemon",   "level",   "light",
    "lilac",   "lily",    "linen",   "lion",    "lotus",   "lunar",
    "lynx",    "magnet",  "main",    "maple",   "marble",  "marsh",
    "meadow",  "melon",   "mesa",    "meteor",  "midnight","mill",
    "mint",    "mirror",  "mist",    "molten",  "monarch", "moon",
    "morning", "mountain","music",   "myrtle",  "nectar",  "nest",
    "night",   "noble",   "north",   "notebook","nova",    "oak",
    "ocean",   "olive",   "onyx",    "opal",    "orange",  "orbit",
    "orchard", "oriole",  "otter",   "owl",     "oxide",   "palm",
    "panda",   "paper",   "parade",  "path",    "peach",   "pearl",
    "pebble",  "pepper",  "petal",   "pine",    "pioneer", "plain",
    "planet",  "plum",    "pocket",  "polar",   "pond",    "poplar",
    "prairie", "prism",   "pulse",   "pumpkin", "quartz",  "quiet",
    "rabbit",  "raft",    "rain",    "range",   "rapid",   "raven",
    "reef",    "ridge",   "river",   "roast",   "robin",   "rocket",
    "root",    "rose",    "royal",   "ruby",    "rustic",  "saddle",
    "saffron", "sage",    "salmon",  "sand",    "sapphire","scout",
    "seed",    "shadow",  "shell",   "shore",   "silver",  "sky",
    "slate",   "smooth",  "snow",    "solar",   "south",   "spark",
    "spice",   "spring",  "spruce",  "star",    "steel",   "stone",
    "storm",   "stream",  "summit",  "sunset",  "swan",    "sweet",
    "table",   "talon",   "tea",     "temple",  "terra",   "thunder",
    "tiger",   "timber",  "topaz",   "torch",   "trail",   "tree",
    "tulip",   "tundra",  "valley",  "vapor",   "velvet",  "violet",
    "vista",   "walnut",  "water",   "wave",    "west",    "whale",
    "wheat",   "willow",  "wind",    "winter",  "wolf",    "wonder",
    "wood",    "wren",    "yard",    "yellow",  "zebra",   "zenith",
};

}  // namespace

const std::vector<std::string>& synth_wordlist() {
  static const std::vector<std::string> words(std::begin(kWords), std::end(kWords));
  return words;
}

std::vector<LabeledRecord> synth_dataset(const SynthConfig& cfg) {
  if (cfg.benign_count < 0 || cfg.malicious_count < 0) {
    throw InvalidConfig("sample counts must be >= 0");
  }
  if (cfg.min_tokens < 1 || cfg.max_tokens < cfg.min_tokens) {
    throw InvalidConfig("need 1 <= min_tokens <= max_tokens");
  }
  if (cfg.mal_min_len < 1 || cfg.mal_max_len < cfg.mal_min_len ||
      cfg.mal_max_len > kMaxDomainLength) {
    throw InvalidConfig("malicious length range out of bounds");
  }
  if (cfg.mal_alphabet.empty()) throw InvalidConfig("malicious alphabet is empty");
  if (cfg.hyphen_prob < 0.0 || cfg.hyphen_prob > 1.0) {
    throw InvalidConfig("hyphen_prob must be within [0, 1]");
  }

  Rng rng(cfg.seed);
  const std::vector<std::string>& words = synth_wordlist();
  std::unordered_set<std::string> used;
  std::vector<LabeledRecord> out;
  out.reserve(static_cast<std::size_t>(cfg.benign_count + cfg.malicious_count));

  auto emit = [&](std::string text, int label, const char* family) -> bool {
    if (!validate_e2ld(text).valid() || used.count(text)) return false;
    used.insert(text);
    out.push_back({Domain::from_text(text), label, label ? family : "", ""});
    return true;
  };

  const long long max_attempts =
      1000LL * (cfg.benign_count + cfg.malicious_count) + 1000;
  long long attempts = 0;

  int made = 0;
  while (made < cfg.benign_count) {
    if (++attempts > max_attempts) throw PoolExhausted("benign generator stalled");
    const int k = static_cast<int>(rng.uniform_int(cfg.min_tokens, cfg.max_tokens));
    std::string text = words[rng.uniform_index(words.size())];
    for (int i = 1; i < k; ++i) {
      if (rng.uniform() < cfg.hyphen_prob) text += '-';
      text += words[rng.uniform_index(words.size())];
    }
    if (text.size() > kMaxDomainLength) continue;
    if (emit(std::move(text), 0, "")) ++made;
  }

  made = 0;
  while (made < cfg.malicious_count) {
    if (++attempts > max_attempts) throw PoolExhausted("malicious generator stalled");
    const auto len = static_cast<std::size_t>(
        rng.uniform_int(cfg.mal_min_len, cfg.mal_max_len));
    std::string text(len, '?');
    for (char& c : text) c = cfg.mal_alphabet[rng.uniform_index(cfg.mal_alphabet.size())];
    if (emit(std::move(text), 1, "rand")) ++made;
  }
  return out;
}

}  // namespace advdga
