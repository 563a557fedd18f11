public class O { void f() { Object o = new Object(); String s = o; } }
