#include <fstream>
#include <iostream>

#include "inmo/random.hpp"
#include "inmo/synthetic.hpp"

// Writes the bundled toy dataset: 200 users, 150 items in 4 taste blocks, ratings 1-5 with
// timestamps. Low ratings are mixed in so the rating filter has something to drop.
int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_toy_data OUT.tsv\n";
        return 2;
    }
    inmo::BlockSpec spec;
    spec.p_in = 0.5;
    spec.p_out = 0.04;
    spec.seed = 7;
    const auto ds = inmo::make_block_dataset(spec);
    inmo::Rng rng(8);
    std::ofstream out(argv[1]);
    out << "# user\titem\trating\ttimestamp\n";
    std::int64_t ts = 1'600'000'000;
    for (const auto& e : ds.edges()) {
        const int rating = inmo::uniform_real(rng) < 0.1 ? 1 + static_cast<int>(inmo::uniform_index(rng, 3))
                                                         : 4 + static_cast<int>(inmo::uniform_index(rng, 2));
        ts += 1 + static_cast<std::int64_t>(inmo::uniform_index(rng, 3600));
        out << "u" << e.user << "\ti" << e.item << "\t" << rating << "\t" << ts << "\n";
    }
    return out ? 0 : 1;
}
