#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "fino/dataset.hpp"
#include "fino/errors.hpp"
#include "fino/rng.hpp"

using namespace fino;
namespace fs = std::filesystem;

namespace {

Episode make_episode(const std::string& id, ActionName action, Label label) {
    Episode ep;
    ep.id = id;
    ep.action = action;
    ep.label = label;
    Rng rng(std::hash<std::string>{}(id));
    for (int i = 0; i < 12; ++i) {
        cv::Mat rgb(24, 24, CV_8UC3);
        cv::Mat depth(24, 24, CV_16UC1);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) {
                rgb.at<cv::Vec3b>(y, x) = {uint8_t(rng.uniform_int(0, 255)),
                                           uint8_t(rng.uniform_int(0, 255)),
                                           uint8_t(rng.uniform_int(0, 255))};
                depth.at<uint16_t>(y, x) = uint16_t(rng.uniform_int(400, 4000));
            }
        ep.rgb_frames.push_back(rgb);
        ep.depth_frames.push_back(depth);
        ep.frame_timestamps.push_back(i * 0.25);
    }
    ep.audio.resize(8000);
    for (auto& s : ep.audio) s = float(rng.uniform(-0.5, 0.5));
    ep.has_phase_annotation = true;
    ep.phases = {0.0, 1.0, 1.75, 2.75};
    ep.recorder = "synthetic";
    return ep;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fino_test_" + std::to_string(Rng(std::random_device{}()).uniform_int(0, 1 << 30)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<EpisodeRef> fake_refs(int n, ActionName action, Label label, int start = 0) {
    std::vector<EpisodeRef> refs;
    for (int i = 0; i < n; ++i) {
        std::string id = to_string(action) + "_" + to_string(label) + "_" + std::to_string(start + i);
        refs.push_back({id, "/nowhere/" + id, action, label});
    }
    return refs;
}

}  // namespace

TEST_SUITE("data_model") {

TEST_CASE("action label legality") {
    CHECK(is_legal_pair(ActionName::pour, Label::overflow));
    CHECK(is_legal_pair(ActionName::pour, Label::spill));
    CHECK_FALSE(is_legal_pair(ActionName::push, Label::overflow));
    CHECK_FALSE(is_legal_pair(ActionName::stack, Label::spill));
    CHECK_FALSE(is_legal_pair(ActionName::pour, Label::collision));
    CHECK_FALSE(is_legal_pair(ActionName::pour, Label::miss));
    CHECK_FALSE(is_legal_pair(ActionName::pour, Label::overturn));
    CHECK_FALSE(is_legal_pair(ActionName::put_in_container, Label::overturn));
    CHECK(is_legal_pair(ActionName::push, Label::overturn));
    for (auto a : {ActionName::push, ActionName::pick_place, ActionName::pour,
                   ActionName::put_in_container, ActionName::stack})
        CHECK(is_legal_pair(a, Label::success));
}

TEST_CASE("detection label derivation") {
    CHECK(derive_detection_label(Label::success) == DetectionLabel::success);
    for (auto l : kFailureLabels) CHECK(derive_detection_label(l) == DetectionLabel::fail);
}

TEST_CASE("episode validation catches schema violations") {
    Episode ep = make_episode("x", ActionName::push, Label::success);
    CHECK_NOTHROW(ep.validate());

    Episode bad = ep;
    bad.label = Label::overflow;  // illegal for push
    CHECK_THROWS_AS(bad.validate(), SchemaViolation);

    bad = ep;
    bad.depth_frames.pop_back();
    CHECK_THROWS_AS(bad.validate(), CorruptEpisode);

    bad = ep;
    bad.frame_timestamps[5] = bad.frame_timestamps[4];  // not strictly increasing
    CHECK_THROWS_AS(bad.validate(), CorruptEpisode);

    bad = ep;
    bad.phases.t1 = 3.5;  // phase order broken
    CHECK_THROWS_AS(bad.validate(), SchemaViolation);
}

TEST_CASE("episode directory round trip") {
    TempDir tmp;
    Episode ep = make_episode("rt0", ActionName::pour, Label::spill);
    std::string dir = (tmp.path / "rt0").string();
    write_episode(dir, ep);
    CHECK(fs::exists(fs::path(dir) / "rgb" / "000000.png"));
    CHECK(fs::exists(fs::path(dir) / "depth" / "000011.png"));
    CHECK(fs::exists(fs::path(dir) / "audio.wav"));
    CHECK(fs::exists(fs::path(dir) / "meta.json"));

    Episode back = load_episode(dir);
    CHECK(back.id == "rt0");
    CHECK(back.action == ActionName::pour);
    CHECK(back.label == Label::spill);
    REQUIRE(back.rgb_frames.size() == 12);
    for (int i = 0; i < 12; ++i) {
        CHECK(cv::norm(back.rgb_frames[size_t(i)], ep.rgb_frames[size_t(i)], cv::NORM_INF) == 0);
        cv::Mat diff = back.depth_frames[size_t(i)] != ep.depth_frames[size_t(i)];
        CHECK(cv::countNonZero(diff) == 0);
        CHECK(back.frame_timestamps[size_t(i)] == doctest::Approx(ep.frame_timestamps[size_t(i)]));
    }
    REQUIRE(back.audio.size() == ep.audio.size());
    for (size_t i = 0; i < ep.audio.size(); ++i)
        CHECK(std::abs(back.audio[i] - ep.audio[i]) < 1.0f / 16384);
    CHECK(back.has_phase_annotation);
    CHECK(back.phases.t1 == doctest::Approx(1.0));
}

TEST_CASE("missing modality and corrupt metadata are reported") {
    TempDir tmp;
    Episode ep = make_episode("m0", ActionName::stack, Label::collision);
    std::string dir = (tmp.path / "m0").string();
    write_episode(dir, ep);
    fs::remove(fs::path(dir) / "audio.wav");
    CHECK_THROWS_AS(load_episode(dir), MissingModality);

    std::string dir2 = (tmp.path / "m1").string();
    write_episode(dir2, ep);
    std::ofstream(fs::path(dir2) / "meta.json") << "{not json";
    CHECK_THROWS_AS(load_episode(dir2), CorruptEpisode);

    CHECK_THROWS_AS(load_episode((tmp.path / "absent").string()), MissingModality);
}

TEST_CASE("scan finds every episode directory") {
    TempDir tmp;
    for (int i = 0; i < 3; ++i) {
        Episode ep = make_episode("s" + std::to_string(i), ActionName::push,
                                  i == 0 ? Label::success : Label::collision);
        write_episode((tmp.path / ep.id).string(), ep);
    }
    auto refs = scan_dataset_root(tmp.path.string());
    REQUIRE(refs.size() == 3);
    std::map<std::string, Label> by_id;
    for (const auto& r : refs) by_id[r.id] = r.label;
    CHECK(by_id.at("s0") == Label::success);
    CHECK(by_id.at("s2") == Label::collision);
    CHECK_THROWS_AS(scan_dataset_root((tmp.path / "nope").string()), IoError);
}

TEST_CASE("single stratum of ten splits 7/1/2") {
    auto refs = fake_refs(10, ActionName::push, Label::success);
    DatasetIndex idx = make_splits(refs, 3);
    CHECK(idx.subset(Split::train).size() == 7);
    CHECK(idx.subset(Split::val).size() == 1);
    CHECK(idx.subset(Split::test).size() == 2);
}

TEST_CASE("strata of three or more reach train and test") {
    for (int n : {3, 4, 5, 6}) {
        auto refs = fake_refs(n, ActionName::pour, Label::overflow);
        for (uint64_t seed = 0; seed < 5; ++seed) {
            DatasetIndex idx = make_splits(refs, seed);
            CHECK(idx.subset(Split::train).size() >= 1);
            CHECK(idx.subset(Split::test).size() >= 1);
        }
    }
}

TEST_CASE("split sizes stay near 70/10/20 overall") {
    std::vector<EpisodeRef> refs;
    auto add = [&](int n, ActionName a, Label l) {
        auto r = fake_refs(n, a, l, int(refs.size()));
        refs.insert(refs.end(), r.begin(), r.end());
    };
    add(40, ActionName::push, Label::success);
    add(31, ActionName::pour, Label::success);
    add(25, ActionName::pour, Label::overflow);
    add(17, ActionName::stack, Label::collision);
    add(11, ActionName::pick_place, Label::miss);
    DatasetIndex idx = make_splits(refs, 9);
    int total = int(refs.size());
    CHECK(idx.subset(Split::train).size() + idx.subset(Split::val).size() +
              idx.subset(Split::test).size() ==
          size_t(total));
    CHECK(std::abs(int(idx.subset(Split::train).size()) - int(0.7 * total)) <= 3);
    CHECK(std::abs(int(idx.subset(Split::test).size()) - int(0.2 * total)) <= 3);
}

TEST_CASE("splits are deterministic per seed and stratified by pair") {
    std::vector<EpisodeRef> refs = fake_refs(20, ActionName::push, Label::success);
    auto more = fake_refs(10, ActionName::push, Label::collision, 20);
    refs.insert(refs.end(), more.begin(), more.end());
    DatasetIndex a = make_splits(refs, 5);
    DatasetIndex b = make_splits(refs, 5);
    CHECK(a.split_assignment == b.split_assignment);
    DatasetIndex c = make_splits(refs, 6);
    CHECK(a.split_assignment != c.split_assignment);
    // each stratum is split independently: collision stratum alone gives 7/1/2
    int coll_train = 0, coll_test = 0;
    for (const auto& r : refs)
        if (r.label == Label::collision) {
            Split s = a.split_assignment.at(r.id);
            coll_train += s == Split::train;
            coll_test += s == Split::test;
        }
    CHECK(coll_train == 7);
    CHECK(coll_test == 2);
    CHECK_THROWS_AS(make_splits({}, 0), EmptyDataset);
}

}  // TEST_SUITE
