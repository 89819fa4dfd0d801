#include "default_stubs.hpp"

namespace tdgtype {

// Hand-written signatures for common builtins and stdlib functions.
// X, K, V and T are placeholders; Iterable[X] binds X to the element types.
std::string_view default_stub_text() {
  return R"(# builtins
len : Callable[[Union[str, bytes, List, Tuple, Set, Dict]], int]
enumerate : Callable[[Iterable[X]], Generator[Tuple[int, X]]]
enumerate : Callable[[Iterable[X], int], Generator[Tuple[int, X]]]
range : Callable[[int, int, int], List[int]]
isinstance : Callable[..., bool]
issubclass : Callable[..., bool]
hasattr : Callable[..., bool]
callable : Callable[[X], bool]
print : Callable[..., None]
input : Callable[..., str]
repr : Callable[[X], str]
hash : Callable[[X], int]
id : Callable[[X], int]
ord : Callable[[str], int]
chr : Callable[[int], str]
str : Callable[..., str]
int : Callable[..., int]
float : Callable[..., float]
bool : Callable[..., bool]
bytes : Callable[..., bytes]
type : Callable[[X], type]
list : Callable[[], List]
list : Callable[[Iterable[X]], List[X]]
set : Callable[[], Set]
set : Callable[[Iterable[X]], Set[X]]
frozenset : Callable[[Iterable[X]], Set[X]]
tuple : Callable[[], Tuple]
tuple : Callable[[Iterable[X]], Tuple[X, ...]]
dict : Callable[..., Dict]
sorted : Callable[[Iterable[X]], List[X]]
reversed : Callable[[Iterable[X]], Generator[X]]
iter : Callable[[Iterable[X]], Generator[X]]
next : Callable[[Generator[X]], X]
zip : Callable[..., Generator[Tuple]]
map : Callable[..., Generator]
filter : Callable[..., Generator]
sum : Callable[[Iterable[X]], X]
min : Callable[[Iterable[X]], X]
min : Callable[[X, X], X]
max : Callable[[Iterable[X]], X]
max : Callable[[X, X], X]
abs : Callable[[X], X]
round : Callable[[float], int]
round : Callable[[float, int], float]
any : Callable[[Iterable[X]], bool]
all : Callable[[Iterable[X]], bool]

# str / bytes methods (receiver first)
str.join : Callable[[str, Iterable[str]], str]
str.split : Callable[[str, str, int], List[str]]
str.rsplit : Callable[[str, str, int], List[str]]
str.splitlines : Callable[[str, bool], List[str]]
str.strip : Callable[[str, str], str]
str.lstrip : Callable[[str, str], str]
str.rstrip : Callable[[str, str], str]
str.replace : Callable[[str, str, str, int], str]
str.lower : Callable[[str], str]
str.upper : Callable[[str], str]
str.title : Callable[[str], str]
str.startswith : Callable[[str, Union[str, Tuple]], bool]
str.endswith : Callable[[str, Union[str, Tuple]], bool]
str.find : Callable[[str, str, int, int], int]
str.count : Callable[[str, str, int, int], int]
str.format : Callable[..., str]
str.encode : Callable[[str, str, str], bytes]
str.isdigit : Callable[[str], bool]
bytes.decode : Callable[[bytes, str, str], str]

# list / dict / set methods
list.append : Callable[[List[X], X], None]
list.extend : Callable[[List[X], Iterable[X]], None]
list.insert : Callable[[List[X], int, X], None]
list.pop : Callable[[List[X], int], X]
list.index : Callable[[List[X], X], int]
list.count : Callable[[List[X], X], int]
list.copy : Callable[[List[X]], List[X]]
list.sort : Callable[..., None]
list.reverse : Callable[[List], None]
dict.get : Callable[[Dict[K, V], K, V], V]
dict.pop : Callable[[Dict[K, V], K, V], V]
dict.setdefault : Callable[[Dict[K, V], K, V], V]
dict.keys : Callable[[Dict[K, V]], List[K]]
dict.values : Callable[[Dict[K, V]], List[V]]
dict.items : Callable[[Dict[K, V]], List[Tuple[K, V]]]
dict.copy : Callable[[Dict[K, V]], Dict[K, V]]
set.add : Callable[[Set[X], X], None]
set.union : Callable[[Set[X], Iterable[X]], Set[X]]
set.intersection : Callable[[Set[X], Iterable[X]], Set[X]]
set.difference : Callable[[Set[X], Iterable[X]], Set[X]]

# stdlib
math.pi : float
math.sqrt : Callable[[float], float]
math.floor : Callable[[float], int]
math.ceil : Callable[[float], int]
os.sep : str
os.getcwd : Callable[[], str]
os.path.join : Callable[..., str]
os.path.exists : Callable[..., bool]
os.path.basename : Callable[[str], str]
os.path.dirname : Callable[[str], str]
sys.argv : List[str]
json.dumps : Callable[..., str]
)";
}

}  // namespace tdgtype
