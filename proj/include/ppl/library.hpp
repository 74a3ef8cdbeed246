#ifndef PPL_LIBRARY_HPP
#define PPL_LIBRARY_HPP

#include <memory>
#include <string>
#include <string_view>

#include "ppl/module.hpp"

namespace ppl {

namespace detail {

// Higher-order functions must be written in the query language so that
// the functions they call may sample and observe.
inline constexpr std::string_view kPrelude = R"clj(
(defm map-step* [colls]
  (loop [colls colls firsts [] rests []]
    (if (seq colls)
      (let [s (seq (first colls))]
        (if s
          (recur (rest colls) (conj firsts (first s)) (conj rests (rest s)))
          nil))
      [firsts rests])))

(defm map [f & colls]
  (cond
    (= (count colls) 1)
    (loop [xs (seq (first colls)) acc []]
      (if xs
        (recur (next xs) (conj acc (f (first xs))))
        acc))

    (> (count colls) 1)
    (loop [colls colls acc []]
      (let [step (map-step* colls)]
        (if step
          (recur (second step) (conj acc (apply f (first step))))
          acc)))

    :else (arity-error* "map")))

(defm reduce-from* [f acc xs]
  (loop [acc acc xs (seq xs)]
    (if xs
      (recur (f acc (first xs)) (next xs))
      acc)))

(defm reduce [f & args]
  (case (count args)
    1 (let [s (seq (first args))]
        (if s (reduce-from* f (first s) (next s)) (f)))
    2 (reduce-from* f (first args) (second args))
    (arity-error* "reduce")))

(defm filter [pred coll]
  (loop [xs (seq coll) acc []]
    (if xs
      (let [x (first xs)]
        (recur (next xs) (if (pred x) (conj acc x) acc)))
      acc)))

(defm some [pred coll]
  (loop [xs (seq coll)]
    (when xs
      (let [v (pred (first xs))]
        (if v v (recur (next xs)))))))

(defm repeatedly [n f]
  (loop [i 0 acc []]
    (if (< i n)
      (recur (inc i) (conj acc (f)))
      acc)))

(defm comp [& fs]
  (if (seq fs)
    (let [fs (reverse fs)]
      (fn [& args]
        (loop [gs (rest fs) v (apply (first fs) args)]
          (if (seq gs)
            (recur (rest gs) ((first gs) v))
            v))))
    identity))

(defm partial [f & bound]
  (fn [& args] (apply f (concat bound args))))
)clj";

inline const Module& prelude_module() {
  static const std::shared_ptr<const Module> mod = load_module_with(kPrelude, "<prelude>", CompileEnv{});
  return *mod;
}

}  // namespace detail

/// CPS implementations of map, reduce, filter, some, repeatedly, comp and
/// partial, keyed by name.
inline const LibraryTable& builtin_library() {
  static const LibraryTable table = [] {
    LibraryTable t;
    for (const char* name : {"map", "reduce", "filter", "some", "repeatedly", "comp", "partial"}) {
      t.emplace(name, *detail::prelude_module().global(name));
    }
    return t;
  }();
  return table;
}

/// Default compilation environment: all primitives plus the CPS library.
inline CompileEnv default_compile_env() {
  CompileEnv env;
  env.library = &builtin_library();
  return env;
}

inline std::shared_ptr<const Module> load_module(std::string_view text, std::string source_name = "<input>") {
  return load_module_with(text, std::move(source_name), default_compile_env());
}

}  // namespace ppl

#endif  // PPL_LIBRARY_HPP
