#include <string>

#include "doctest.h"
#include "groundwork/script.hpp"

using namespace groundwork::script;

namespace {

Value run(const std::string& src, std::vector<Value> args = {}, Limits limits = {}) {
  auto prog = compile(src);
  Interpreter interp(limits);
  return interp.call(*prog, "f", std::move(args));
}

std::string eval(const std::string& expr) {
  return run("def f():\n    return " + expr + "\n").repr();
}

ErrorKind error_kind(const std::string& src, std::string* py_type = nullptr, Limits limits = {}) {
  try {
    run(src, {}, limits);
  } catch (const ScriptError& e) {
    if (py_type) *py_type = e.py_type();
    return e.kind();
  }
  FAIL("expected a ScriptError");
  return ErrorKind::Runtime;
}

}  // namespace

TEST_CASE("arithmetic follows Python semantics") {
  CHECK(eval("7 // 2") == "3");
  CHECK(eval("-7 // 2") == "-4");
  CHECK(eval("-7 % 3") == "2");
  CHECK(eval("7 % -3") == "-2");
  CHECK(eval("7 / 2") == "3.5");
  CHECK(eval("4 / 2") == "2.0");
  CHECK(eval("2 ** 10") == "1024");
  CHECK(eval("2 ** -1") == "0.5");
  CHECK(eval("1 + 2 * 3 - 4") == "3");
  CHECK(eval("-3 ** 2") == "-9");
  CHECK(eval("True + True") == "2");
  CHECK(eval("1 < 2 < 3") == "True");
  CHECK(eval("1 < 2 > 3") == "False");
  CHECK(eval("1 == 1.0") == "True");
  CHECK(eval("0.1 + 0.2") == "0.30000000000000004");
  CHECK(eval("round(2.5)") == "2");
  CHECK(eval("round(3.5)") == "4");
  CHECK(eval("divmod(-7, 2)") == "(-4, 1)");
  CHECK(eval("abs(-3)") == "3");
  CHECK(eval("5 & 3, 5 | 3, 5 ^ 3, 1 << 4, 256 >> 2") == "(1, 7, 6, 16, 64)");
}

TEST_CASE("strings") {
  CHECK(eval("'a,b,,c'.split(',')") == "['a', 'b', '', 'c']");
  CHECK(eval("'  x y  '.split()") == "['x', 'y']");
  CHECK(eval("'-'.join(['a', 'b'])") == "'a-b'");
  CHECK(eval("'abc'[::-1]") == "'cba'");
  CHECK(eval("'abc'[1:]") == "'bc'");
  CHECK(eval("'rock_word'.replace('_word', '')") == "'rock'");
  CHECK(eval("'flag_obj'.endswith('_obj')") == "True");
  CHECK(eval("'ab' * 3") == "'ababab'");
  CHECK(eval("'x=%d y=%s' % (3, 'q')") == "'x=3 y=q'");
  CHECK(eval("'{} is {}'.format('rock', 'flag')") == "'rock is flag'");
  CHECK(eval("'{0:>4}|{1:.2f}'.format(7, 3.14159)") == "'   7|3.14'");
  CHECK(eval("f'{1 + 1} and {\"s\"!r}'") == "\"2 and 's'\"");
  CHECK(eval("f'{3.5:05.1f}'") == "'003.5'");
  CHECK(eval("'ab' in 'cabd'") == "True");
  CHECK(eval("str(1.0) + str(None) + repr('q')") == "\"1.0None'q'\"");
  CHECK(eval("'Hello'.upper().lower()") == "'hello'");
  CHECK(eval("int('42') + int(' -3 ')") == "39");
  CHECK(eval("float('1.5')") == "1.5");
  CHECK(eval("'a_b_c'.rfind('_')") == "3");
  CHECK(eval("'abc'.rfind('z')") == "-1");
  CHECK(eval("'a b c'.rsplit(' ', 1)") == "['a b', 'c']");
  CHECK(eval("'a  b '.rsplit()") == "['a', 'b']");
  CHECK(eval("'x,y,z'.rsplit(',', maxsplit=1)") == "['x,y', 'z']");
  CHECK(eval("'rock is flag'.partition(' is ')") == "('rock', ' is ', 'flag')");
  CHECK(eval("'abc'.partition('/')") == "('abc', '', '')");
  CHECK(eval("'a/b/c'.rpartition('/')") == "('a/b', '/', 'c')");
  CHECK(eval("'abc'.rpartition('/')") == "('', '', 'abc')");
}

TEST_CASE("containers") {
  CHECK(eval("[1, 2, 3][-1]") == "3");
  CHECK(eval("[1, 2, 3, 4][1:3]") == "[2, 3]");
  CHECK(eval("[x * x for x in range(5) if x % 2 == 0]") == "[0, 4, 16]");
  CHECK(eval("{k: v for k, v in [('a', 1), ('b', 2)]}") == "{'a': 1, 'b': 2}");
  CHECK(eval("sorted({3, 1, 2})") == "[1, 2, 3]");
  CHECK(eval("sorted([[2, 1], [1, 5], [1, 2]])") == "[[1, 2], [1, 5], [2, 1]]");
  CHECK(eval("sorted(['b', 'a', 'c'], reverse=True)") == "['c', 'b', 'a']");
  CHECK(eval("sorted([(1, 'b'), (0, 'a')], key=lambda t: t[1])") == "[(0, 'a'), (1, 'b')]");
  CHECK(eval("max([3, 9, 2]), min([3, 9, 2])") == "(9, 2)");
  CHECK(eval("max([], default=-1)") == "-1");
  CHECK(eval("list(zip([1, 2], 'ab'))") == "[(1, 'a'), (2, 'b')]");
  CHECK(eval("list(enumerate('ab', 1))") == "[(1, 'a'), (2, 'b')]");
  CHECK(eval("{1, 2} | {3}") == "{1, 2, 3}");
  CHECK(eval("{1, 2} & {2, 3}") == "{2}");
  CHECK(eval("{1, 2} - {2}") == "{1}");
  CHECK(eval("set()") == "set()");
  CHECK(eval("(1,)") == "(1,)");
  CHECK(eval("[1, 2] + [3]") == "[1, 2, 3]");
  CHECK(eval("[0] * 3") == "[0, 0, 0]");
  CHECK(eval("[1, 2] == [1, 2] and (1, 2) != [1, 2]") == "True");
  CHECK(eval("{'a': 1}.get('b', 0)") == "0");
  CHECK(eval("list({'a': 1, 'b': 2}.items())") == "[('a', 1), ('b', 2)]");
  CHECK(eval("[2, 3] in [[1], [2, 3]]") == "True");
  CHECK(eval("sum([1, 2, 3]) + len('abc')") == "9");
  CHECK(eval("any([0, 0, 1]), all([])") == "(True, True)");
  CHECK(eval("list(map(lambda x: x + 1, [1, 2]))") == "[2, 3]");
  CHECK(eval("list(filter(None, [0, 1, 2]))") == "[1, 2]");
  CHECK(eval("list(reversed([1, 2, 3]))") == "[3, 2, 1]");
  CHECK(eval("{(1, 2): 'a'}[(1, 2)]") == "'a'");
  CHECK(eval("[[0] * 2 for _ in range(2)]") == "[[0, 0], [0, 0]]");
  CHECK(eval("[(x, y) for x in range(2) for y in range(2) if x != y]") == "[(0, 1), (1, 0)]");
}

TEST_CASE("statements and control flow") {
  CHECK(run(R"(
def f():
    total = 0
    for i in range(10):
        if i == 7:
            break
        if i % 2:
            continue
        total += i
    else:
        total = -1
    return total
)").repr() == "12");

  CHECK(run(R"(
def f():
    n = 0
    while n < 5:
        n += 1
    else:
        n *= 10
    return n
)").repr() == "50");

  CHECK(run(R"(
def f():
    a, (b, c) = 1, [2, 3]
    a, b = b, a
    return [a, b, c]
)").repr() == "[2, 1, 3]");

  CHECK(run(R"(
def f():
    d = {}
    d.setdefault('x', []).append(1)
    d['y'] = d.get('y', 0) + 2
    del d['x']
    return d
)").repr() == "{'y': 2}");

  CHECK(run(R"(
def f():
    xs = [1, 2, 3, 4]
    xs[1:3] = [9]
    del xs[0]
    xs.insert(0, 7)
    return xs
)").repr() == "[7, 9, 4]");
}

TEST_CASE("functions, closures and recursion") {
  CHECK(run(R"(
def fib(n):
    return n if n < 2 else fib(n - 1) + fib(n - 2)
def f():
    return fib(15)
)").repr() == "610");

  CHECK(run(R"(
def make(k):
    def add(x, y=1):
        return x + y + k
    return add
def f():
    g = make(10)
    return [g(1), g(1, y=5)]
)").repr() == "[12, 16]");

  CHECK(run(R"(
def f():
    count = 0
    def bump():
        nonlocal count
        count += 1
    bump()
    bump()
    return count
)").repr() == "2");

  CHECK(run(R"(
COUNTER = 5
def f():
    global COUNTER
    COUNTER += 1
    return COUNTER
)").repr() == "6");

  CHECK_THROWS_AS(compile("def f(*args):\n    pass\n"), ScriptError);
}

TEST_CASE("exceptions inside scripts") {
  CHECK(run(R"(
def f():
    try:
        {}['missing']
    except KeyError as e:
        return 'caught ' + str(e)
)").repr() == "\"caught 'missing'\"");

  CHECK(run(R"(
def f():
    out = []
    try:
        try:
            raise ValueError('bad')
        finally:
            out.append('finally')
    except Exception as e:
        out.append(str(e))
    return out
)").repr() == "['finally', 'bad']");

  CHECK(run(R"(
def f():
    try:
        1 / 0
    except (TypeError, ArithmeticError):
        return 'arith'
)").repr() == "'arith'");

  std::string type;
  CHECK(error_kind("def f():\n    return undefined_name\n", &type) == ErrorKind::Runtime);
  CHECK(type == "NameError");
  CHECK(error_kind("def f():\n    return [1][3]\n", &type) == ErrorKind::Runtime);
  CHECK(type == "IndexError");
  CHECK(error_kind("def f():\n    assert 1 == 2, 'nope'\n", &type) == ErrorKind::Runtime);
  CHECK(type == "AssertionError");
  CHECK(error_kind("def f():\n    return (1, 2)[0:1] + 'x'\n", &type) == ErrorKind::Runtime);
  CHECK(type == "TypeError");
}

TEST_CASE("errors carry line numbers") {
  try {
    run("def f():\n    x = 1\n    y = x + 'a'\n    return y\n");
    FAIL("no error");
  } catch (const ScriptError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("TypeError") != std::string::npos);
  }
}

TEST_CASE("syntax errors and rejected constructs") {
  CHECK_THROWS_AS(compile("def f(:\n    pass\n"), ScriptError);
  CHECK_THROWS_AS(compile("class A:\n    pass\n"), ScriptError);
  CHECK_THROWS_AS(compile("with open('x') as fh:\n    pass\n"), ScriptError);
  CHECK_THROWS_AS(compile("def f():\n  x = 1\n    y = 2\n"), ScriptError);
  try {
    compile("x = 1\ny = (\n");
  } catch (const ScriptError& e) {
    CHECK(e.kind() == ErrorKind::Syntax);
  }
}

TEST_CASE("sandbox: imports are restricted") {
  std::string type;
  CHECK(error_kind("import os\ndef f():\n    return 1\n", &type) == ErrorKind::Runtime);
  CHECK(type == "ModuleNotFoundError");
  CHECK(error_kind("def f():\n    return open('x')\n", &type) == ErrorKind::Runtime);
  CHECK(type == "NameError");
  CHECK(run("import copy\nimport math\nfrom typing import Dict, List\ndef f():\n    return math.floor(copy.deepcopy(2.7))\n")
            .repr() == "2");
}

TEST_CASE("sandbox: resource limits") {
  Limits tight;
  tight.max_steps = 10'000;
  CHECK(error_kind("def f():\n    while True:\n        pass\n", nullptr, tight) == ErrorKind::StepLimit);

  Limits timed;
  timed.max_steps = 1'000'000'000;
  timed.max_time = std::chrono::milliseconds(50);
  CHECK(error_kind("def f():\n    while True:\n        pass\n", nullptr, timed) == ErrorKind::Timeout);

  CHECK(error_kind("def g(n):\n    return g(n + 1)\ndef f():\n    return g(0)\n") == ErrorKind::Recursion);

  Limits small;
  small.max_allocations = 100'000;
  CHECK(error_kind("def f():\n    xs = []\n    while True:\n        xs.append([0] * 100)\n", nullptr, small) ==
        ErrorKind::Memory);
  CHECK(error_kind("def f():\n    return [0] * 100000000\n") == ErrorKind::Memory);
}

TEST_CASE("fresh globals on every call") {
  auto prog = compile("STATE = []\ndef f():\n    STATE.append(1)\n    return len(STATE)\n");
  Interpreter interp;
  CHECK(interp.call(*prog, "f", {}).as_int() == 1);
  CHECK(interp.call(*prog, "f", {}).as_int() == 1);
}

TEST_CASE("arguments are passed by reference like Python") {
  auto prog = compile("def f(d):\n    d['k'] = 1\n    return d\n");
  Interpreter interp;
  Value d = Value::dict();
  interp.call(*prog, "f", {d});
  CHECK(d.as_dict().size() == 1);
}

TEST_CASE("deepcopy preserves structure and independence") {
  CHECK(run(R"(
import copy
def f():
    a = {'k': [[1, 2]], 'r': ['x']}
    b = copy.deepcopy(a)
    b['k'][0][0] = 9
    return [a['k'][0][0], b['k'][0][0]]
)").repr() == "[1, 9]");
}

TEST_CASE("list iteration observes in-place mutation") {
  CHECK(run(R"(
def f():
    xs = [1]
    for x in xs:
        if x < 4:
            xs.append(x + 1)
    return xs
)").repr() == "[1, 2, 3, 4]");
}
