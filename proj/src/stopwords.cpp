#include <string>
#include <unordered_set>
#include <vector>

#include "casumm/corpus.hpp"

namespace casumm {

namespace {

// Fixed English function-word list; bump the version string on any edit.
const std::vector<std::string>& stopwords() {
    static const std::vector<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "also", "although",
        "am", "among", "an", "and", "any", "are", "as", "at", "be", "because", "been",
        "before", "being", "below", "between", "both", "but", "by", "can", "cannot",
        "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
        "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
        "herself", "him", "himself", "his", "how", "however", "i", "if", "in", "into",
        "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself",
        "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other",
        "our", "ours", "ourselves", "out", "over", "own", "per", "same", "she",
        "should", "since", "so", "some", "such", "than", "that", "the", "their",
        "theirs", "them", "themselves", "then", "there", "these", "they", "this",
        "those", "though", "through", "thus", "to", "too", "under", "until", "up",
        "upon", "very", "via", "was", "we", "were", "what", "when", "where", "whether",
        "which", "while", "who", "whom", "why", "will", "with", "within", "without",
        "would", "yet", "you", "your", "yours", "yourself", "yourselves",
    };
    return words;
}

const std::unordered_set<std::string>& stopword_set() {
    static const std::unordered_set<std::string> set(stopwords().begin(), stopwords().end());
    return set;
}

}  // namespace

bool is_stopword(const std::string& token) {
    return stopword_set().count(token) != 0;
}

const std::vector<std::string>& stopword_list() {
    return stopwords();
}

const char* stopword_list_version() {
    return "en-141-v1";
}

}  // namespace casumm
