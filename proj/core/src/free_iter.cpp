#include "semicirc/free_iter.hpp"

#include <algorithm>

namespace semicirc {

namespace {

// --- cursor over the lazy-list tree -----------------------------------------

// Cursor tree mirroring the lazy list structure. Every subtree cursor always
// points at a valid item of a nonempty node (empty parts are skipped at
// construction since Cat drops zero-length children).
struct Cur {
    const FreeNode* node;
    size_t part = 0; // Cat: active child index
    std::unique_ptr<Cur> a, b;

    std::unique_ptr<Cur> clone() const {
        auto c = std::make_unique<Cur>();
        c->node = node;
        c->part = part;
        if (a) c->a = a->clone();
        if (b) c->b = b->clone();
        return c;
    }
};

std::unique_ptr<Cur> make_edge(const FreeElem& e, bool first, long long& ops) {
    ops++;
    auto c = std::make_unique<Cur>();
    c->node = e.get();
    switch (e->k) {
        case FreeNode::K::Leaf: break;
        case FreeNode::K::Cat:
            c->part = first ? 0 : e->parts.size() - 1;
            c->a = make_edge(e->parts[c->part], first, ops);
            break;
        case FreeNode::K::Prod:
            c->a = make_edge(e->a, first, ops);
            c->b = make_edge(e->b, first, ops);
            break;
    }
    return c;
}

// Advance; returns true when the cursor wrapped (caller must handle).
bool step_next(Cur& c, long long& ops) {
    ops++;
    switch (c.node->k) {
        case FreeNode::K::Leaf: return true;
        case FreeNode::K::Cat:
            if (!step_next(*c.a, ops)) return false;
            c.part++;
            if (c.part == c.node->parts.size()) {
                c.part = 0;
                c.a = make_edge(c.node->parts[0], true, ops);
                return true;
            }
            c.a = make_edge(c.node->parts[c.part], true, ops);
            return false;
        case FreeNode::K::Prod:
            // lexicographic, left-major: b is the fast axis
            if (!step_next(*c.b, ops)) return false;
            return step_next(*c.a, ops);
    }
    return true;
}

bool step_prev(Cur& c, long long& ops) {
    ops++;
    switch (c.node->k) {
        case FreeNode::K::Leaf: return true;
        case FreeNode::K::Cat:
            if (!step_prev(*c.a, ops)) return false;
            if (c.part == 0) {
                c.part = c.node->parts.size() - 1;
                c.a = make_edge(c.node->parts[c.part], false, ops);
                return true;
            }
            c.part--;
            c.a = make_edge(c.node->parts[c.part], false, ops);
            return false;
        case FreeNode::K::Prod:
            if (!step_prev(*c.b, ops)) return false;
            return step_prev(*c.a, ops);
    }
    return true;
}

void collect_cur(const Cur& c, Monomial& out, long long& ops) {
    ops++;
    switch (c.node->k) {
        case FreeNode::K::Leaf:
            out.insert(out.end(), c.node->mono.begin(), c.node->mono.end());
            break;
        case FreeNode::K::Cat: collect_cur(*c.a, out, ops); break;
        case FreeNode::K::Prod:
            collect_cur(*c.a, out, ops);
            collect_cur(*c.b, out, ops);
            break;
    }
}

int depth_of(const FreeNode* n) {
    switch (n->k) {
        case FreeNode::K::Leaf: return 1;
        case FreeNode::K::Cat: {
            int d = 0;
            for (const auto& p : n->parts) d = std::max(d, depth_of(p.get()));
            return d + 1;
        }
        case FreeNode::K::Prod:
            return 1 + std::max(depth_of(n->a.get()), depth_of(n->b.get()));
    }
    return 1;
}

struct FreeImpl final : BiIterator::Impl {
    FreeElem root;
    std::unique_ptr<Cur> cur;

    explicit FreeImpl(FreeElem r) : root(std::move(r)) {}
    std::unique_ptr<Impl> clone() const override {
        auto c = std::make_unique<FreeImpl>(root);
        if (cur) c->cur = cur->clone();
        return c;
    }
    unsigned long long length() const override { return root->len; }
    void first(long long& ops) override { cur = make_edge(root, true, ops); }
    void last(long long& ops) override { cur = make_edge(root, false, ops); }
    bool next(long long& ops) override { return step_next(*cur, ops); }
    bool prev(long long& ops) override { return step_prev(*cur, ops); }
    void collect(Monomial& out, long long& ops) const override { collect_cur(*cur, out, ops); }
    int budget() const override { return root->len ? 4 * depth_of(root.get()) : 1; }
};

// --- generic composition backends -------------------------------------------

struct ConcatImpl final : BiIterator::Impl {
    std::vector<std::unique_ptr<Impl>> parts; // all parts, empties included
    std::vector<size_t> live;                 // indices of nonempty parts
    size_t at = 0;                            // position in `live`
    unsigned long long len = 0;

    std::unique_ptr<Impl> clone() const override {
        auto c = std::make_unique<ConcatImpl>();
        for (const auto& p : parts) c->parts.push_back(p->clone());
        c->live = live;
        c->at = at;
        c->len = len;
        return c;
    }
    unsigned long long length() const override { return len; }
    void first(long long& ops) override {
        at = 0;
        parts[live[at]]->first(ops);
    }
    void last(long long& ops) override {
        at = live.size() - 1;
        parts[live[at]]->last(ops);
    }
    bool next(long long& ops) override {
        ops++;
        if (!parts[live[at]]->next(ops)) return false;
        // the finished part wrapped to its first item, as a later sweep needs
        if (++at == live.size()) {
            at = 0;
            return true;
        }
        parts[live[at]]->first(ops);
        return false;
    }
    bool prev(long long& ops) override {
        ops++;
        if (!parts[live[at]]->prev(ops)) return false;
        if (at == 0) {
            at = live.size() - 1;
            return true;
        }
        parts[live[--at]]->last(ops);
        return false;
    }
    void collect(Monomial& out, long long& ops) const override {
        ops++;
        parts[live[at]]->collect(out, ops);
    }
    int budget() const override {
        int b = 1;
        for (const auto& p : parts) b = std::max(b, p->budget());
        return b + 2;
    }
};

struct ProdImpl final : BiIterator::Impl {
    std::unique_ptr<Impl> a, b; // both nonempty; b is the fast axis
    unsigned long long len = 0;

    std::unique_ptr<Impl> clone() const override {
        auto c = std::make_unique<ProdImpl>();
        c->a = a->clone();
        c->b = b->clone();
        c->len = len;
        return c;
    }
    unsigned long long length() const override { return len; }
    void first(long long& ops) override {
        a->first(ops);
        b->first(ops);
    }
    void last(long long& ops) override {
        a->last(ops);
        b->last(ops);
    }
    bool next(long long& ops) override {
        ops++;
        if (!b->next(ops)) return false;
        return a->next(ops);
    }
    bool prev(long long& ops) override {
        ops++;
        if (!b->prev(ops)) return false;
        return a->prev(ops);
    }
    void collect(Monomial& out, long long& ops) const override {
        ops++;
        a->collect(out, ops);
        b->collect(out, ops);
    }
    int budget() const override { return a->budget() + b->budget() + 2; }
};

unsigned long long clamped_mul(unsigned long long x, unsigned long long y) {
    if (x == 0 || y == 0) return 0;
    unsigned long long r = x * y;
    if (r / y != x) fail("BudgetExceeded", "monomial count overflow");
    return r;
}

} // namespace

// --- BiIterator wrapper ------------------------------------------------------

BiIterator::BiIterator(FreeElem root)
    : root_(std::move(root)), impl_(std::make_unique<FreeImpl>(root_)) {
    if (impl_->length()) {
        impl_->first(ops_);
        pos_ = 1;
    }
    access_time_budget = impl_->budget();
}

BiIterator::BiIterator(std::unique_ptr<Impl> impl)
    : root_(free_zero()), free_backed_(false), impl_(std::move(impl)) {
    if (impl_->length()) {
        impl_->first(ops_);
        pos_ = 1;
    }
    access_time_budget = impl_->budget();
}

BiIterator::~BiIterator() = default;

BiIterator::BiIterator(const BiIterator& o)
    : root_(o.root_), free_backed_(o.free_backed_), impl_(o.impl_->clone()), pos_(o.pos_),
      ops_(0) {
    access_time_budget = o.access_time_budget;
}

BiIterator& BiIterator::operator=(const BiIterator& o) {
    if (this != &o) {
        root_ = o.root_;
        free_backed_ = o.free_backed_;
        impl_ = o.impl_->clone();
        pos_ = o.pos_;
        access_time_budget = o.access_time_budget;
    }
    return *this;
}

unsigned long long BiIterator::length() const { return impl_->length(); }

std::unique_ptr<BiIterator::Impl> BiIterator::clone_impl() const { return impl_->clone(); }

const Monomial* BiIterator::current() {
    if (pos_ == 0) return nullptr;
    scratch_.clear();
    impl_->collect(scratch_, ops_);
    if (scratch_.size() > 1) std::sort(scratch_.begin(), scratch_.end());
    return &scratch_;
}

void BiIterator::next() {
    if (pos_ == 0) return;
    if (impl_->next(ops_)) pos_ = 1; // wrapped around
    else pos_ = pos_ % impl_->length() + 1;
}

void BiIterator::previous() {
    if (pos_ == 0) return;
    if (impl_->prev(ops_)) pos_ = impl_->length();
    else pos_ = pos_ - 1;
}

BiIterator iter_concat(const std::vector<BiIterator>& parts) {
    bool all_free = true;
    for (const auto& p : parts) all_free = all_free && p.free_backed();
    if (all_free) {
        std::vector<FreeElem> roots;
        roots.reserve(parts.size());
        for (const auto& p : parts) roots.push_back(p.root());
        return BiIterator(free_cat(std::move(roots)));
    }
    auto c = std::make_unique<ConcatImpl>();
    for (size_t i = 0; i < parts.size(); i++) {
        c->parts.push_back(parts[i].clone_impl());
        unsigned long long l = parts[i].length();
        if (l) {
            c->live.push_back(i);
            c->len += l;
        }
    }
    return BiIterator(std::move(c));
}

BiIterator iter_product(const BiIterator& a, const BiIterator& b) {
    if (a.free_backed() && b.free_backed()) return BiIterator(free_mul(a.root(), b.root()));
    if (a.length() == 0 || b.length() == 0) return BiIterator();
    auto c = std::make_unique<ProdImpl>();
    c->a = a.clone_impl();
    c->b = b.clone_impl();
    c->len = clamped_mul(a.length(), b.length());
    return BiIterator(std::move(c));
}

} // namespace semicirc
