public class N { void f() { List<String> l = null; } }
