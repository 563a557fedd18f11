public class S01 { void f() { String s = "abc; } }
