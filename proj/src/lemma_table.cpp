#include <cctype>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "casumm/corpus.hpp"

namespace casumm {

namespace {

// Irregular forms. Suffix rules below handle the regular inflections.
const std::unordered_map<std::string, std::string>& lemma_table() {
    static const std::unordered_map<std::string, std::string> table = {
        {"am", "be"},        {"is", "be"},         {"are", "be"},
        {"was", "be"},       {"were", "be"},       {"been", "be"},
        {"being", "be"},     {"has", "have"},      {"had", "have"},
        {"having", "have"},  {"does", "do"},       {"did", "do"},
        {"done", "do"},      {"doing", "do"},      {"said", "say"},
        {"went", "go"},      {"gone", "go"},       {"going", "go"},
        {"made", "make"},    {"took", "take"},     {"taken", "take"},
        {"got", "get"},      {"gotten", "get"},    {"came", "come"},
        {"saw", "see"},      {"seen", "see"},      {"knew", "know"},
        {"known", "know"},   {"gave", "give"},     {"given", "give"},
        {"found", "find"},   {"told", "tell"},     {"thought", "think"},
        {"became", "become"},{"left", "leave"},    {"felt", "feel"},
        {"kept", "keep"},    {"held", "hold"},     {"brought", "bring"},
        {"began", "begin"},  {"begun", "begin"},   {"wrote", "write"},
        {"written", "write"},{"stood", "stand"},   {"heard", "hear"},
        {"meant", "mean"},   {"met", "meet"},      {"paid", "pay"},
        {"ran", "run"},      {"sold", "sell"},     {"sent", "send"},
        {"spent", "spend"},  {"spoke", "speak"},   {"spoken", "speak"},
        {"taught", "teach"}, {"understood", "understand"},
        {"won", "win"},      {"wore", "wear"},     {"worn", "wear"},
        {"lost", "lose"},    {"led", "lead"},      {"grew", "grow"},
        {"grown", "grow"},   {"fell", "fall"},     {"fallen", "fall"},
        {"drew", "draw"},    {"drawn", "draw"},    {"chose", "choose"},
        {"chosen", "choose"},{"broke", "break"},   {"broken", "break"},
        {"bought", "buy"},   {"built", "build"},   {"caught", "catch"},
        {"dealt", "deal"},   {"drove", "drive"},   {"driven", "drive"},
        {"ate", "eat"},      {"eaten", "eat"},     {"flew", "fly"},
        {"flown", "fly"},    {"forgot", "forget"}, {"forgotten", "forget"},
        {"froze", "freeze"}, {"frozen", "freeze"}, {"hid", "hide"},
        {"hidden", "hide"},  {"hung", "hang"},     {"laid", "lay"},
        {"lent", "lend"},    {"lit", "light"},     {"rode", "ride"},
        {"ridden", "ride"},  {"rose", "rise"},     {"risen", "rise"},
        {"sang", "sing"},    {"sung", "sing"},     {"sank", "sink"},
        {"sat", "sit"},      {"slept", "sleep"},   {"spun", "spin"},
        {"struck", "strike"},{"swam", "swim"},     {"swum", "swim"},
        {"swore", "swear"},  {"sworn", "swear"},   {"threw", "throw"},
        {"thrown", "throw"}, {"woke", "wake"},     {"woken", "wake"},
        {"children", "child"}, {"men", "man"},     {"women", "woman"},
        {"feet", "foot"},    {"teeth", "tooth"},   {"mice", "mouse"},
        {"geese", "goose"},  {"wives", "wife"},    {"lives", "life"},
        {"knives", "knife"}, {"leaves", "leaf"},   {"shelves", "shelf"},
        {"wolves", "wolf"},  {"halves", "half"},   {"selves", "self"},
        {"died", "die"},     {"dies", "die"},      {"dying", "die"},
        {"lying", "lie"},    {"tying", "tie"},     {"used", "use"},
        {"using", "use"},    {"buses", "bus"},     {"gases", "gas"},
        {"agreed", "agree"}, {"freed", "free"},    {"controlled", "control"},
        {"controlling", "control"}, {"admits", "admit"},
    };
    return table;
}

// Words the suffix rules must leave alone.
const std::unordered_set<std::string>& no_strip() {
    static const std::unordered_set<std::string> words = {
        // -s words that are not plurals
        "its", "his", "this", "as", "us", "yes", "news", "always", "perhaps",
        "towards", "besides", "series", "species", "politics", "economics",
        "mathematics", "physics",
        // -ing words that are not gerunds
        "during", "morning", "evening", "nothing", "something", "anything",
        "everything", "spring", "string", "sibling", "darling", "ceiling",
        // -ed words with no verb stem
        "indeed", "hundred", "sacred", "naked", "wicked",
    };
    return words;
}

bool is_vowel_at(const std::string& s, std::size_t i) {
    char c = s[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    // y acts as a vowel after a consonant
    return c == 'y' && i > 0 && !is_vowel_at(s, i - 1);
}

// number of vowel->consonant transitions; one VC group marks a short stem
// whose silent e was dropped by the inflection
int vc_measure(const std::string& s) {
    int m = 0;
    bool prev_vowel = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        bool v = is_vowel_at(s, i);
        if (prev_vowel && !v) ++m;
        prev_vowel = v;
    }
    return m;
}

// consonant-vowel-consonant ending, final consonant not w/x/y; signals a
// dropped silent e (plac+ed -> place)
bool cvc_ending(const std::string& s) {
    std::size_t n = s.size();
    if (n < 2) return false;
    char last = s[n - 1];
    if (is_vowel_at(s, n - 1) || last == 'w' || last == 'x' || last == 'y') return false;
    if (!is_vowel_at(s, n - 2)) return false;
    return n == 2 || !is_vowel_at(s, n - 3);
}

bool doubled_final(const std::string& s) {
    std::size_t n = s.size();
    if (n < 2 || s[n - 1] != s[n - 2]) return false;
    switch (s[n - 1]) {
        case 'b': case 'd': case 'g': case 'm':
        case 'n': case 'p': case 'r': case 't':
            return true;
        default:
            return false;
    }
}

std::string strip_participle(std::string stem) {
    if (doubled_final(stem)) {
        stem.pop_back();
    } else if (vc_measure(stem) == 1 && cvc_ending(stem)) {
        stem.push_back('e');
    }
    return stem;
}

bool ends_with(const std::string& s, const char* suffix) {
    std::size_t n = std::char_traits<char>::length(suffix);
    return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

}  // namespace

std::string lemmatize(const std::string& token) {
    std::string w;
    w.reserve(token.size());
    for (unsigned char c : token) w.push_back(static_cast<char>(std::tolower(c)));

    if (w.size() <= 2 || is_punctuation(w)) return w;

    const auto& table = lemma_table();
    if (auto it = table.find(w); it != table.end()) return it->second;
    if (no_strip().count(w)) return w;

    if (ends_with(w, "ies") && w.size() >= 5) return w.substr(0, w.size() - 3) + "y";
    if (ends_with(w, "ied") && w.size() >= 5) return w.substr(0, w.size() - 3) + "y";
    if (ends_with(w, "es")) {
        std::string stem = w.substr(0, w.size() - 2);
        if (ends_with(stem, "ch") || ends_with(stem, "sh") || ends_with(stem, "ss") ||
            ends_with(stem, "x") || ends_with(stem, "z") || ends_with(stem, "o"))
            return stem;
        // fall through to the plain -s rule (makes -> make)
    }
    if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
        !ends_with(w, "is") && w.size() >= 4) {
        return w.substr(0, w.size() - 1);
    }
    if (ends_with(w, "ed") && w.size() >= 5) {
        std::string stem = w.substr(0, w.size() - 2);
        if (stem.size() >= 3) return strip_participle(std::move(stem));
    }
    if (ends_with(w, "ing") && w.size() >= 6) {
        std::string stem = w.substr(0, w.size() - 3);
        if (stem.size() >= 3) return strip_participle(std::move(stem));
    }
    return w;
}

}  // namespace casumm
