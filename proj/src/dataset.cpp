#include "inmo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "inmo/error.hpp"
#include "inmo/random.hpp"

namespace inmo {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    std::istringstream is{std::string(s)};
    is >> out;
    return !is.fail() && is.eof();
}

// Builds CSR offsets/targets from (source, target) pairs already sorted by source then target.
void build_csr(std::size_t n_sources, const std::vector<std::pair<Index, Index>>& pairs,
               std::vector<std::size_t>& offsets, std::vector<Index>& targets) {
    offsets.assign(n_sources + 1, 0);
    targets.resize(pairs.size());
    for (const auto& [s, t] : pairs) ++offsets[s + 1];
    for (std::size_t s = 0; s < n_sources; ++s) offsets[s + 1] += offsets[s];
    for (std::size_t k = 0; k < pairs.size(); ++k) targets[k] = pairs[k].second;
}

}  // namespace

FileFormat parse_file_format(const std::string& name) {
    if (name == "tsv" || name == "triple-tsv") return FileFormat::Tsv;
    if (name == "csv" || name == "triple-csv") return FileFormat::Csv;
    throw ConfigError("unknown file format '" + name + "' (expected tsv or csv)");
}

RawInteractions parse_interactions(std::istream& in, FileFormat format) {
    const char sep = format == FileFormat::Tsv ? '\t' : ',';
    RawInteractions raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = split_fields(view, sep);
        if (fields.size() < 2 || fields.size() > 4 || fields[0].empty() || fields[1].empty())
            throw DataError("malformed line " + std::to_string(line_no) + ": expected user" + sep + "item[" + sep +
                            "rating[" + sep + "timestamp]]");
        RawRecord rec{std::string(fields[0]), std::string(fields[1]), std::nullopt, std::nullopt};
        if (fields.size() >= 3 && !fields[2].empty()) {
            double r = 0.0;
            if (!parse_number(fields[2], r))
                throw DataError("malformed rating on line " + std::to_string(line_no));
            rec.rating = r;
        }
        if (fields.size() == 4 && !fields[3].empty()) {
            std::int64_t ts = 0;
            if (!parse_number(fields[3], ts))
                throw DataError("malformed timestamp on line " + std::to_string(line_no));
            rec.timestamp = ts;
        }
        raw.records.push_back(std::move(rec));
    }
    return raw;
}

RawInteractions load_interactions(const std::filesystem::path& path, FileFormat format) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read interaction file '" + path.string() + "'");
    return parse_interactions(in, format);
}

InteractionDataset InteractionDataset::from_edges(std::size_t n_users, std::size_t n_items, std::vector<Edge> edges,
                                                  Keys user_keys, Keys item_keys) {
    for (const auto& e : edges)
        if (e.user >= n_users || e.item >= n_items) throw std::out_of_range("edge index out of range");
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    InteractionDataset ds;
    ds.n_users_ = n_users;
    ds.n_items_ = n_items;
    ds.user_keys_ = std::move(user_keys);
    ds.item_keys_ = std::move(item_keys);

    std::vector<std::pair<Index, Index>> pairs;
    pairs.reserve(edges.size());
    for (const auto& e : edges) pairs.emplace_back(e.user, e.item);
    build_csr(n_users, pairs, ds.user_offsets_, ds.user_items_);

    for (auto& p : pairs) std::swap(p.first, p.second);
    std::sort(pairs.begin(), pairs.end());
    build_csr(n_items, pairs, ds.item_offsets_, ds.item_users_);
    return ds;
}

bool InteractionDataset::contains(Index u, Index i) const {
    const auto items = items_of(u);
    return std::binary_search(items.begin(), items.end(), i);
}

std::vector<Edge> InteractionDataset::edges() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (Index u = 0; u < n_users_; ++u)
        for (Index i : items_of(u)) out.push_back({u, i});
    return out;
}

InteractionDataset InteractionDataset::transposed() const {
    std::vector<Edge> flipped;
    flipped.reserve(num_edges());
    for (const auto& e : edges()) flipped.push_back({e.item, e.user});
    return from_edges(n_items_, n_users_, std::move(flipped), item_keys_, user_keys_);
}

InteractionDataset InteractionDataset::with_edges(std::vector<Edge> edges) const {
    return from_edges(n_users_, n_items_, std::move(edges), user_keys_, item_keys_);
}

Matrix InteractionDataset::to_dense() const {
    Matrix y(n_users_, n_items_);
    for (Index u = 0; u < n_users_; ++u)
        for (Index i : items_of(u)) y(u, i) = 1.0;
    return y;
}

bool InteractionDataset::has_isolated_entities() const {
    for (Index u = 0; u < n_users_; ++u)
        if (user_degree(u) == 0) return true;
    for (Index i = 0; i < n_items_; ++i)
        if (item_degree(i) == 0) return true;
    return false;
}

bool InteractionDataset::operator==(const InteractionDataset& other) const {
    return n_users_ == other.n_users_ && n_items_ == other.n_items_ && user_offsets_ == other.user_offsets_ &&
           user_items_ == other.user_items_;
}

InteractionDataset preprocess(const RawInteractions& raw, const PreprocessOptions& options) {
    if (raw.records.empty()) throw DataError("preprocess: no interaction records");

    std::vector<std::string> user_names, item_names;
    std::unordered_map<std::string, Index> user_ids, item_ids;
    std::vector<Edge> edges;
    for (const auto& rec : raw.records) {
        if (rec.rating && !(*rec.rating > options.rating_threshold)) continue;
        auto [uit, unew] = user_ids.try_emplace(rec.user, static_cast<Index>(user_names.size()));
        if (unew) user_names.push_back(rec.user);
        auto [iit, inew] = item_ids.try_emplace(rec.item, static_cast<Index>(item_names.size()));
        if (inew) item_names.push_back(rec.item);
        edges.push_back({uit->second, iit->second});
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    // k-core fixpoint: drop every edge touching a sub-threshold entity until nothing changes.
    std::vector<std::size_t> udeg(user_names.size()), ideg(item_names.size());
    while (true) {
        std::fill(udeg.begin(), udeg.end(), 0);
        std::fill(ideg.begin(), ideg.end(), 0);
        for (const auto& e : edges) {
            ++udeg[e.user];
            ++ideg[e.item];
        }
        const auto before = edges.size();
        std::erase_if(edges, [&](const Edge& e) {
            return udeg[e.user] < options.min_degree || ideg[e.item] < options.min_degree;
        });
        if (edges.size() == before) break;
    }
    if (edges.empty()) throw DataError("preprocess: no interactions left after filtering");

    // Dense reindexing keeps first-appearance order of the surviving keys.
    std::vector<Index> unew(user_names.size(), 0), inew(item_names.size(), 0);
    std::vector<char> ukeep(user_names.size(), 0), ikeep(item_names.size(), 0);
    for (const auto& e : edges) {
        ukeep[e.user] = 1;
        ikeep[e.item] = 1;
    }
    auto user_keys = std::make_shared<std::vector<std::string>>();
    auto item_keys = std::make_shared<std::vector<std::string>>();
    for (std::size_t u = 0; u < user_names.size(); ++u)
        if (ukeep[u]) {
            unew[u] = static_cast<Index>(user_keys->size());
            user_keys->push_back(user_names[u]);
        }
    for (std::size_t i = 0; i < item_names.size(); ++i)
        if (ikeep[i]) {
            inew[i] = static_cast<Index>(item_keys->size());
            item_keys->push_back(item_names[i]);
        }
    for (auto& e : edges) e = {unew[e.user], inew[e.item]};
    const auto n = user_keys->size();
    const auto m = item_keys->size();
    return InteractionDataset::from_edges(n, m, std::move(edges), std::move(user_keys), std::move(item_keys));
}

std::size_t fraction_count(double frac, std::size_t count) {
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(count) + 1e-9));
}

std::array<std::size_t, 3> split_counts(std::size_t degree, const SplitRatios& ratios) {
    std::array<std::size_t, 3> counts{fraction_count(ratios.train, degree), fraction_count(ratios.valid, degree),
                                      fraction_count(ratios.test, degree)};
    std::size_t assigned = counts[0] + counts[1] + counts[2];
    for (std::size_t slot = 0; assigned < degree; slot = (slot + 1) % 3, ++assigned) ++counts[slot];
    return counts;
}

DatasetSplit split_per_user(const InteractionDataset& ds, const SplitRatios& ratios, std::uint64_t seed) {
    const double sum = ratios.train + ratios.valid + ratios.test;
    if (!(ratios.train > 0 && ratios.valid > 0 && ratios.test > 0) || std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split ratios must be positive and sum to 1");

    Rng rng(seed);
    std::vector<Edge> train, valid, test;
    for (Index u = 0; u < ds.num_users(); ++u) {
        const auto items_span = ds.items_of(u);
        std::vector<Index> items(items_span.begin(), items_span.end());
        shuffle(items, rng);
        const auto counts = split_counts(items.size(), ratios);
        std::size_t k = 0;
        for (; k < counts[0]; ++k) train.push_back({u, items[k]});
        for (; k < counts[0] + counts[1]; ++k) valid.push_back({u, items[k]});
        for (; k < items.size(); ++k) test.push_back({u, items[k]});
    }
    return DatasetSplit{ds.with_edges(std::move(train)), ds.with_edges(std::move(valid)),
                        ds.with_edges(std::move(test)), seed, ratios};
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Transductive: return "transductive";
        case ScenarioKind::NewInteractions: return "new-interactions";
        case ScenarioKind::NewUsersItems: return "new-users-items";
    }
    return "unknown";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
    if (name == "transductive") return ScenarioKind::Transductive;
    if (name == "new-interactions") return ScenarioKind::NewInteractions;
    if (name == "new-users-items") return ScenarioKind::NewUsersItems;
    throw ConfigError("unknown scenario '" + name + "' (expected transductive, new-interactions or new-users-items)");
}

InductiveScenario make_transductive_scenario(const DatasetSplit& split) {
    return {ScenarioKind::Transductive, split.train, split.valid, split.train, split.test, {}, {}};
}

InductiveScenario make_new_interactions_scenario(const DatasetSplit& split, double hold_frac, std::uint64_t seed) {
    if (!(hold_frac > 0.0 && hold_frac < 1.0)) throw ConfigError("hold_frac must lie in (0, 1)");
    Rng rng(seed);
    const auto& train = split.train;
    std::vector<Edge> kept;
    for (Index u = 0; u < train.num_users(); ++u) {
        const auto span = train.items_of(u);
        std::vector<Index> items(span.begin(), span.end());
        shuffle(items, rng);
        const std::size_t hold = fraction_count(hold_frac, items.size());
        for (std::size_t k = hold; k < items.size(); ++k) kept.push_back({u, items[k]});
    }
    InductiveScenario sc;
    sc.kind = ScenarioKind::NewInteractions;
    sc.train_view = train.with_edges(std::move(kept));
    sc.valid_view = split.valid;
    sc.test_observed = train;
    sc.test_targets = split.test;
    return sc;
}

InductiveScenario make_new_users_items_scenario(const DatasetSplit& split, double entity_frac, std::uint64_t seed) {
    if (!(entity_frac > 0.0 && entity_frac < 1.0)) throw ConfigError("entity_frac must lie in (0, 1)");
    Rng rng(seed);
    const std::size_t n = split.train.num_users();
    const std::size_t m = split.train.num_items();

    auto pick = [&](std::size_t count) {
        std::vector<Index> ids(count);
        for (std::size_t k = 0; k < count; ++k) ids[k] = static_cast<Index>(k);
        shuffle(ids, rng);
        ids.resize(fraction_count(entity_frac, count));
        std::sort(ids.begin(), ids.end());
        return ids;
    };
    InductiveScenario sc;
    sc.kind = ScenarioKind::NewUsersItems;
    sc.new_user_ids = pick(n);
    sc.new_item_ids = pick(m);

    std::vector<char> new_user(n, 0), new_item(m, 0);
    for (Index u : sc.new_user_ids) new_user[u] = 1;
    for (Index i : sc.new_item_ids) new_item[i] = 1;
    auto strip = [&](const InteractionDataset& view) {
        auto edges = view.edges();
        std::erase_if(edges, [&](const Edge& e) { return new_user[e.user] || new_item[e.item]; });
        return view.with_edges(std::move(edges));
    };
    sc.train_view = strip(split.train);
    if (sc.train_view.num_edges() == 0) throw DataError("new-users/items removal leaves an empty training graph");
    sc.valid_view = strip(split.valid);
    sc.test_observed = split.train;
    sc.test_targets = split.test;
    return sc;
}

void write_edges(std::ostream& out, const InteractionDataset& ds) {
    for (const auto& e : ds.edges()) out << e.user << '\t' << e.item << '\n';
}

InteractionDataset read_edges(std::istream& in, std::size_t n_users, std::size_t n_items) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = split_fields(view, '\t');
        Index u = 0, i = 0;
        if (fields.size() != 2 || !parse_number(fields[0], u) || !parse_number(fields[1], i) || u >= n_users ||
            i >= n_items)
            throw DataError("malformed edge on line " + std::to_string(line_no));
        edges.push_back({u, i});
    }
    return InteractionDataset::from_edges(n_users, n_items, std::move(edges));
}

}  // namespace inmo
