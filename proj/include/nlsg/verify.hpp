#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace nlsg::verify {

struct ItemResult {
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct Item {
    std::string id;
    std::string summary;
    std::function<ItemResult()> run;
};

// The one-shot verification suite: each item is self-contained and prints
// one pass/fail line when driven through run_acceptance.
const std::vector<Item>& acceptance_items();

// Runs items whose id or summary contains `filter` (all when empty);
// returns 0 iff every executed item passed.
int run_acceptance(std::ostream& os, const std::string& filter = "");

} // namespace nlsg::verify
