// Factors a synthetic ratings matrix with ALS and prints the top items for a
// few users, skipping items they already rated.

#include <algorithm>
#include <iostream>
#include <numeric>

#include "mli/experiment.hpp"

int main() {
    const auto ratings = mli::generateLowRankRatings(200, 150, 5, 0.3, 7);
    mli::WorkerPool pool(4);
    const auto model = mli::alsTrain(ratings, mli::AlsConfig{5, 0.01, 10, 42, 4}, &pool);
    std::cout << "observed rmse " << mli::observedRmse(model, ratings) << '\n';
    for (std::size_t user = 0; user < 3; ++user) {
        const auto scores = model.recommend(user);
        std::vector<std::size_t> items(scores.size());
        std::iota(items.begin(), items.end(), 0);
        std::erase_if(items, [&](std::size_t j) { return ratings.byUser().get(user, j) != 0.0; });
        std::stable_sort(items.begin(), items.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        std::cout << "user " << user << ':';
        for (std::size_t i = 0; i < 5 && i < items.size(); ++i) std::cout << ' ' << items[i] << " (" << scores[items[i]] << ')';
        std::cout << '\n';
    }
    return 0;
}
